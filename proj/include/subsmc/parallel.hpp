#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace subsmc {

/// One or more per-element failures raised inside parallel_for. Collected at
/// the barrier; failures() lists (element index, message) in index order.
class ParallelMapError : public std::runtime_error {
 public:
  explicit ParallelMapError(std::vector<std::pair<std::size_t, std::string>> f)
      : std::runtime_error(render(f)), failures_(std::move(f)) {}

  const std::vector<std::pair<std::size_t, std::string>>& failures() const {
    return failures_;
  }

 private:
  static std::string render(const std::vector<std::pair<std::size_t, std::string>>& f) {
    std::string out = "parallel map failed on " + std::to_string(f.size()) +
                      " element(s):";
    for (const auto& [i, msg] : f)
      out += "\n  [" + std::to_string(i) + "] " + msg;
    return out;
  }
  std::vector<std::pair<std::size_t, std::string>> failures_;
};

/// Applies fn(i) for i in [0, count) across n_workers threads with static
/// contiguous partitioning. fn must be pure given element i and its own
/// derived RNG stream, so the result is bit-identical for any worker count.
/// All workers run to the barrier; per-element exceptions are collected and
/// rethrown as one ParallelMapError.
template <class Fn>
void parallel_for(std::size_t count, int n_workers, Fn&& fn) {
  if (count == 0) return;
  std::vector<std::pair<std::size_t, std::string>> failures;

  if (n_workers <= 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (const std::exception& e) {
        failures.emplace_back(i, e.what());
      }
    }
    if (!failures.empty()) throw ParallelMapError(std::move(failures));
    return;
  }

  const auto workers = static_cast<std::size_t>(n_workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  std::mutex mu;
  std::vector<std::thread> threads;

  auto run_range = [&](std::size_t lo, std::size_t hi) {
    std::vector<std::pair<std::size_t, std::string>> local;
    for (std::size_t i = lo; i < hi; ++i) {
      try {
        fn(i);
      } catch (const std::exception& e) {
        local.emplace_back(i, e.what());
      }
    }
    if (!local.empty()) {
      std::lock_guard<std::mutex> lock(mu);
      for (auto& item : local) failures.push_back(std::move(item));
    }
  };

  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    if (lo >= count) break;
    const std::size_t hi = std::min(count, lo + chunk);
    threads.emplace_back(run_range, lo, hi);
  }
  run_range(0, std::min(count, chunk));
  for (auto& t : threads) t.join();

  if (!failures.empty()) {
    std::sort(failures.begin(), failures.end());
    throw ParallelMapError(std::move(failures));
  }
}

}  // namespace subsmc
