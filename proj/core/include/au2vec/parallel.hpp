#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace au2vec {

/// Number of workers to use when the caller passes 0.
inline unsigned default_workers() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

/// Splits [0, n) into `shards` contiguous ranges of near-equal size.
struct ShardRange {
  std::size_t begin;
  std::size_t end;
};

inline ShardRange shard_range(std::size_t n, std::size_t shards, std::size_t s) {
  const std::size_t base = n / shards, extra = n % shards;
  const std::size_t begin = s * base + std::min(s, extra);
  return {begin, begin + base + (s < extra ? 1 : 0)};
}

/// Runs fn(shard, begin, end) over `workers` contiguous shards of [0, n).
/// With one worker the call is made inline. The first exception thrown by any
/// shard is rethrown on the calling thread after all shards finish.
template <class Fn>
void parallel_shards(std::size_t n, unsigned workers, Fn&& fn) {
  const std::size_t shards = std::max<std::size_t>(1, std::min<std::size_t>(workers, n));
  if (shards == 1) {
    fn(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  std::exception_ptr failure;
  std::mutex mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(shards);
    for (std::size_t s = 0; s < shards; ++s) {
      pool.emplace_back([&, s] {
        const auto r = shard_range(n, shards, s);
        try {
          fn(s, r.begin, r.end);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace au2vec
