#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>
#include <random>
#include <vector>

namespace airstar::link {

using Clock = std::chrono::steady_clock;

// Per-message delay drawn uniformly from [mean - jitter, mean + jitter],
// floored at zero.
class LatencyModel {
 public:
  LatencyModel() = default;
  LatencyModel(double mean_ms, double jitter_ms, std::uint64_t seed = 0)
      : mean_ms_(mean_ms), jitter_ms_(jitter_ms), rng_(seed) {}

  Clock::duration sample() {
    double ms = mean_ms_;
    if (jitter_ms_ > 0.0) ms += std::uniform_real_distribution<double>(-jitter_ms_, jitter_ms_)(rng_);
    return std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double, std::milli>(std::max(ms, 0.0)));
  }
  bool zero() const { return mean_ms_ <= 0.0 && jitter_ms_ <= 0.0; }

 private:
  double mean_ms_ = 0.0;
  double jitter_ms_ = 0.0;
  std::mt19937_64 rng_;
};

// Multi-producer FIFO whose items become visible after an injected delay.
// Delivery order equals send order even under jitter.
template <class T>
class Channel {
 public:
  explicit Channel(LatencyModel latency = {}) : latency_(std::move(latency)) {}

  void push(T item) {
    {
      std::lock_guard lock(mu_);
      Clock::time_point ready = Clock::now() + latency_.sample();
      if (!items_.empty() && items_.back().first > ready) ready = items_.back().first;
      items_.emplace_back(ready, std::move(item));
    }
    cv_.notify_all();
  }

  // Everything deliverable right now; never blocks.
  std::vector<T> drain() {
    std::lock_guard lock(mu_);
    std::vector<T> out;
    const auto now = Clock::now();
    while (!items_.empty() && items_.front().first <= now) {
      out.push_back(std::move(items_.front().second));
      items_.pop_front();
    }
    return out;
  }

  // Next deliverable item, waiting up to `timeout`. nullopt on timeout or
  // once closed and empty.
  std::optional<T> pop(Clock::duration timeout) {
    std::unique_lock lock(mu_);
    const auto deadline = Clock::now() + timeout;
    while (true) {
      const auto now = Clock::now();
      if (!items_.empty() && items_.front().first <= now) {
        T item = std::move(items_.front().second);
        items_.pop_front();
        return item;
      }
      if (closed_ && items_.empty()) return std::nullopt;
      if (now >= deadline) return std::nullopt;
      auto wake = deadline;
      if (!items_.empty() && items_.front().first < wake) wake = items_.front().first;
      cv_.wait_until(lock, wake);
    }
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }
  void reopen() {
    std::lock_guard lock(mu_);
    closed_ = false;
  }
  bool closed() const {
    std::lock_guard lock(mu_);
    return closed_;
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::pair<Clock::time_point, T>> items_;
  LatencyModel latency_;
  bool closed_ = false;
};

}  // namespace airstar::link
