// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mshift {

/**
 * @brief Fixed-size pool of worker threads executing index-parallel loops.
 *
 * parallel_for hands out indices through a shared counter; the calling
 * thread participates, so a pool of size 1 runs everything inline. Callers
 * that need reproducible results must make each index's work independent of
 * which thread runs it (all kernels in this library do).
 */
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t size = 1) : size_(std::max<std::size_t>(size, 1)) {
    threads_.reserve(size_ - 1);
    for (std::size_t t = 1; t < size_; ++t) {
      threads_.emplace_back([this] { worker_loop(); });
    }
  }

  ~WorkerPool() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    wake_.notify_all();
    for (auto& t : threads_) t.join();
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  [[nodiscard]] std::size_t size() const noexcept { return size_; }

  template <typename F>
  void parallel_for(std::size_t count, F&& body) {
    if (count == 0) return;
    if (size_ == 1 || count == 1) {
      for (std::size_t i = 0; i < count; ++i) body(i);
      return;
    }
    std::lock_guard call_lock(call_mutex_);
    Job job;
    job.count = count;
    job.body = [&body](std::size_t i) { body(i); };
    {
      std::lock_guard lock(mutex_);
      job_ = &job;
      ++generation_;
    }
    wake_.notify_all();
    run(job);
    {
      std::unique_lock lock(mutex_);
      done_.wait(lock, [&] { return job.finished == count && job.active == 0; });
      job_ = nullptr;
    }
    if (job.error) std::rethrow_exception(job.error);
  }

 private:
  struct Job {
    std::size_t count = 0;
    std::atomic<std::size_t> next{0};
    std::size_t finished = 0;  // guarded by mutex_
    std::size_t active = 0;    // workers currently inside run(); guarded by mutex_
    std::function<void(std::size_t)> body;
    std::exception_ptr error;  // guarded by mutex_
  };

  void run(Job& job) {
    std::size_t local = 0;
    std::exception_ptr err;
    for (;;) {
      const std::size_t i = job.next.fetch_add(1, std::memory_order_relaxed);
      if (i >= job.count) break;
      try {
        job.body(i);
      } catch (...) {
        if (!err) err = std::current_exception();
      }
      ++local;
    }
    std::lock_guard lock(mutex_);
    job.finished += local;
    if (err && !job.error) job.error = err;
  }

  void worker_loop() {
    std::size_t seen = 0;
    for (;;) {
      Job* job = nullptr;
      {
        std::unique_lock lock(mutex_);
        wake_.wait(lock, [&] { return stopping_ || (job_ != nullptr && generation_ != seen); });
        if (stopping_) return;
        seen = generation_;
        job = job_;
        ++job->active;
      }
      run(*job);
      {
        std::lock_guard lock(mutex_);
        --job->active;
      }
      done_.notify_all();
    }
  }

  std::size_t size_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::mutex call_mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  Job* job_ = nullptr;
  std::size_t generation_ = 0;
  bool stopping_ = false;
};

/// Runs body(i) for i in [0, count) on the pool, or inline when pool is null.
template <typename F>
void for_each_index(WorkerPool* pool, std::size_t count, F&& body) {
  if (pool == nullptr) {
    for (std::size_t i = 0; i < count; ++i) body(i);
  } else {
    pool->parallel_for(count, std::forward<F>(body));
  }
}

/// Half-open range [begin, end) of part `part` when splitting `total` into `parts` near-equal pieces.
struct Range {
  std::ptrdiff_t begin;
  std::ptrdiff_t end;
};

inline Range split_range(std::ptrdiff_t total, std::ptrdiff_t parts, std::ptrdiff_t part) {
  const std::ptrdiff_t base = total / parts;
  const std::ptrdiff_t extra = total % parts;
  const std::ptrdiff_t begin = part * base + std::min(part, extra);
  return {begin, begin + base + (part < extra ? 1 : 0)};
}

}  // namespace mshift
