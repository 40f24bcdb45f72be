#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace brwskel::harness {

/// Replicas per block. Fixed so that the reduction tree does not depend on
/// the worker count.
inline constexpr std::uint64_t kBlockSize = 256;

/// Runs fn(replica, acc) for replicas [0, n) on `threads` workers. Each block
/// of kBlockSize consecutive replicas fills its own accumulator in replica
/// order; blocks are merged in block order, so the result is bit-identical
/// for any worker count. The first exception (in block order) is rethrown.
template <class Acc, class Fn>
Acc run_replicas(std::uint64_t n, int threads, const Acc& init, Fn&& fn) {
  const std::uint64_t blocks = (n + kBlockSize - 1) / kBlockSize;
  std::vector<Acc> part(blocks, init);
  std::vector<std::exception_ptr> error(blocks);
  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const std::uint64_t b = next.fetch_add(1);
      if (b >= blocks || failed.load()) return;
      try {
        const std::uint64_t end = std::min(n, (b + 1) * kBlockSize);
        for (std::uint64_t r = b * kBlockSize; r < end; ++r) fn(r, part[b]);
      } catch (...) {
        error[b] = std::current_exception();
        failed = true;
      }
    }
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(std::max<std::uint64_t>(blocks, 1))));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : error)
    if (e) std::rethrow_exception(e);
  Acc out = init;
  for (auto& p : part) out.merge(p);
  return out;
}

}  // namespace brwskel::harness
