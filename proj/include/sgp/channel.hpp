// Copyright 2026 The sgpipe Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <mutex>
#include <optional>
#include <vector>

#include "sgp/types.hpp"

namespace sgp {

// Multi-producer multi-consumer FIFO with a fixed capacity. push() blocks while
// full, pop() blocks while empty. close() wakes everyone; pop() then drains the
// remaining items before returning nullopt.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity), occupancy_(capacity + 1, 0) {
    if (capacity == 0) throw std::invalid_argument("queue capacity must be >= 1");
  }

  // Returns false if the queue was closed before the item could be enqueued.
  bool push(T item) {
    std::unique_lock lock(mu_);
    if (items_.size() >= capacity_) ++full_waits_;
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(item));
    ++occupancy_[items_.size()];
    lock.unlock();
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    if (items_.empty() && !closed_) ++empty_waits_;
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    lock.unlock();
    not_full_.notify_one();
    return item;
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    not_full_.notify_all();
    not_empty_.notify_all();
  }

  bool closed() const {
    std::lock_guard lock(mu_);
    return closed_;
  }
  std::size_t capacity() const noexcept { return capacity_; }

  // occupancy()[k] = number of pushes that left k items queued.
  std::vector<std::size_t> occupancy() const {
    std::lock_guard lock(mu_);
    return occupancy_;
  }
  // Times a producer found the queue full / a consumer found it empty.
  std::size_t full_waits() const {
    std::lock_guard lock(mu_);
    return full_waits_;
  }
  std::size_t empty_waits() const {
    std::lock_guard lock(mu_);
    return empty_waits_;
  }

 private:
  const std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<T> items_;
  bool closed_ = false;
  std::vector<std::size_t> occupancy_;
  std::size_t full_waits_ = 0;
  std::size_t empty_waits_ = 0;
};

// Unbounded inbox with selective receive; senders never block.
template <typename T>
class Mailbox {
 public:
  void send(T msg) {
    {
      std::lock_guard lock(mu_);
      items_.push_back(std::move(msg));
    }
    cv_.notify_all();
  }

  // Removes and returns the first message satisfying `match`, waiting up to
  // `timeout`. Non-matching messages stay queued in arrival order.
  template <typename Pred>
  std::optional<T> receive(Pred match, std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      for (auto it = items_.begin(); it != items_.end(); ++it) {
        if (match(*it)) {
          T msg = std::move(*it);
          items_.erase(it);
          return msg;
        }
      }
      if (cv_.wait_until(lock, deadline) == std::cv_status::timeout) {
        for (auto it = items_.begin(); it != items_.end(); ++it) {
          if (match(*it)) {
            T msg = std::move(*it);
            items_.erase(it);
            return msg;
          }
        }
        return std::nullopt;
      }
    }
  }

  std::size_t pending() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> items_;
};

}  // namespace sgp
