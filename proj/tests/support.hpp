#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "nidtm/nidtm.hpp"

namespace nidtm::testing {

struct Matching {
  std::vector<int> perm;  // estimate column perm[j] matches truth column j
  double mean_l1 = 0.0;
};

/// Best column assignment on l1 distances by exhaustive search (k <= 8).
inline Matching match_columns(const Matrix& truth, const Matrix& est) {
  const int k = static_cast<int>(truth.cols());
  Matrix cost(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) cost(i, j) = (truth.col(i) - est.col(j)).lpNorm<1>();
  std::vector<int> p(k);
  std::iota(p.begin(), p.end(), 0);
  Matching best{p, std::numeric_limits<double>::infinity()};
  do {
    double c = 0.0;
    for (int i = 0; i < k; ++i) c += cost(i, p[i]);
    if (c < best.mean_l1) best = {p, c};
  } while (std::next_permutation(p.begin(), p.end()));
  best.mean_l1 /= k;
  return best;
}

inline Vector permute(const Vector& v, const std::vector<int>& perm) {
  Vector out(v.size());
  for (std::size_t j = 0; j < perm.size(); ++j) out[static_cast<Eigen::Index>(j)] = v[perm[j]];
  return out;
}

inline double max_off_diagonal(const Matrix& m) {
  double out = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (i != j) out = std::max(out, std::abs(m(i, j)));
  return out;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
template <class Cdf>
double ks_distance(std::vector<double> x, Cdf cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

/// Multi-indices of total order 1..max_order over k coordinates.
inline std::vector<MultiIndex> multi_indices(int k, int max_order) {
  std::vector<MultiIndex> out;
  MultiIndex r(k, 0);
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == k - 1) {
      r[pos] = left;
      out.push_back(r);
      return;
    }
    for (int x = left; x >= 0; --x) {
      r[pos] = x;
      self(self, pos + 1, left - x);
    }
  };
  for (int order = 1; order <= max_order; ++order) rec(rec, 0, order);
  return out;
}

inline TopicModel make_model(int d, int k, const IDFamily& family, const Vector& alpha,
                             std::uint64_t seed, double concentration = 0.1) {
  TopicModel m;
  m.a = random_topic_matrix(d, k, concentration, seed);
  m.alpha = alpha;
  m.family = family;
  return m;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace nidtm::testing
