#include <gtest/gtest.h>

#include <atomic>
#include <set>
#include <stdexcept>
#include <vector>

#include "nidtm/parallel.hpp"

using namespace nidtm;

TEST(DeriveSeed, DistinctAcrossStreamsAndIndices) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 4; ++s)
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(42, s, i));
  EXPECT_EQ(seen.size(), 4000u);
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), Exec{4}, [&](std::size_t i) { ++hits[i]; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, PropagatesFirstException) {
  EXPECT_THROW(parallel_for(100, Exec{3},
                            [](std::size_t i) {
                              if (i == 57) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(ChunkedReduce, IndependentOfWorkerCount) {
  // floating-point sums whose value depends on association order
  std::vector<double> x(5000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1.0 / (1.0 + i) * ((i % 7) ? 1e8 : 1e-8);
  auto run = [&](int threads) {
    double total = 0.0;
    chunked_reduce(
        x.size(), Exec{threads}, total,
        [&](std::size_t b, std::size_t e) {
          double s = 0.0;
          for (std::size_t i = b; i < e; ++i) s += x[i];
          return s;
        },
        [](double& t, double p) { t += p; });
    return total;
  };
  const double one = run(1);
  for (int t : {2, 3, 8}) EXPECT_EQ(run(t), one) << t;
}

TEST(ChunkedReduce, EmptyRangeLeavesTotal) {
  int total = 7;
  chunked_reduce(0, Exec{2}, total, [](std::size_t, std::size_t) { return 1; },
                 [](int& t, int p) { t += p; });
  EXPECT_EQ(total, 7);
}
