#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace nidtm {

/// Worker-pool cap shared by every parallel stage. Results never depend on
/// the thread count: work is split into fixed-size chunks and reduced in
/// chunk order.
struct Exec {
  int threads = 1;
};

/// Runs `body(i)` for i in [0, n) on up to `exec.threads` workers.
/// The first exception thrown by any task is rethrown on the caller.
template <class Body>
void parallel_for(std::size_t n, const Exec& exec, Body&& body) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, exec.threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline constexpr std::size_t kChunkSize = 256;

inline std::size_t chunk_count(std::size_t n, std::size_t chunk = kChunkSize) {
  return (n + chunk - 1) / chunk;
}

/// Splits [0, n) into fixed chunks, computes `partial(begin, end)` for each
/// chunk in parallel waves and folds the partials into `total` strictly in
/// chunk order. The result is independent of the worker count.
template <class Total, class Partial, class Combine>
void chunked_reduce(std::size_t n, const Exec& exec, Total& total, Partial&& partial,
                    Combine&& combine, std::size_t chunk = kChunkSize) {
  using P = decltype(partial(std::size_t{0}, std::size_t{0}));
  const std::size_t chunks = chunk_count(n, chunk);
  const std::size_t wave = static_cast<std::size_t>(std::max(1, exec.threads));
  for (std::size_t first = 0; first < chunks; first += wave) {
    const std::size_t count = std::min(wave, chunks - first);
    std::vector<P> parts(count);
    parallel_for(count, exec, [&](std::size_t i) {
      const std::size_t begin = (first + i) * chunk;
      parts[i] = partial(begin, std::min(n, begin + chunk));
    });
    for (auto& p : parts) combine(total, p);
  }
}

/// splitmix64 finalizer; used to derive independent per-item seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t index = 0) {
  return mix_seed(mix_seed(mix_seed(seed) ^ stream) ^ index);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(seed, stream, index));
}

}  // namespace nidtm
