#pragma once

#include <atomic>
#include <future>
#include <thread>
#include <vector>

namespace gendyn {

/// Runs fn(0..n-1) on up to hardware_concurrency workers and collects the
/// results in index order, so parallel sweeps stay deterministic.
template <typename F>
auto parallel_map(int n, F&& fn) {
  using R = decltype(fn(0));
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<R> out(n);
  std::vector<std::future<void>> futs;
  std::atomic<int> next{0};
  for (unsigned w = 0; w < std::min<unsigned>(workers, n > 0 ? n : 1); ++w) {
    futs.push_back(std::async(std::launch::async, [&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) out[i] = fn(i);
    }));
  }
  for (auto& f : futs) f.get();
  return out;
}

}  // namespace gendyn
