#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace trajgame {

/// Bulk-synchronous worker pool. parallel_for(n, fn) runs fn(0..n-1) across
/// the workers and blocks until all items finish. Items must write only to
/// their own output slots; with that discipline results are identical for
/// any worker count. A pool with one worker runs everything inline.
class ThreadPool {
 public:
  explicit ThreadPool(int workers) : workers_(workers < 1 ? 1 : workers) {
    for (int i = 0; i + 1 < workers_; ++i) {
      threads_.emplace_back([this] { worker_loop(); });
    }
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  ~ThreadPool() {
    {
      std::unique_lock<std::mutex> lock(mutex_);
      shutdown_ = true;
      shutdown_atomic_.store(true, std::memory_order_release);
    }
    wake_.notify_all();
    for (auto& t : threads_) t.join();
  }

  int workers() const { return workers_; }

  void parallel_for(int n, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    if (workers_ == 1 || n == 1) {
      for (int i = 0; i < n; ++i) fn(i);
      return;
    }
    auto job = std::make_shared<Job>();
    job->fn = &fn;
    job->items = n;
    job->remaining.store(n, std::memory_order_relaxed);
    {
      std::unique_lock<std::mutex> lock(mutex_);
      job_ = job;
      ++generation_;
      generation_atomic_.store(generation_, std::memory_order_release);
    }
    wake_.notify_all();
    run_job(*job);  // the calling thread participates
    bool drained = false;
    for (int spin = 0; spin < 65536; ++spin) {
      if (job->remaining.load(std::memory_order_acquire) == 0) {
        drained = true;
        break;
      }
    }
    {
      std::unique_lock<std::mutex> lock(mutex_);
      if (!drained) {
        done_.wait(lock, [&] {
          return job->remaining.load(std::memory_order_acquire) == 0;
        });
      }
      if (job_ == job) job_.reset();
    }
    if (job->error) std::rethrow_exception(job->error);
  }

 private:
  struct Job {
    const std::function<void(int)>* fn = nullptr;
    int items = 0;
    std::atomic<int> next{0};
    std::atomic<int> remaining{0};
    std::mutex error_mutex;
    std::exception_ptr error;
  };

  void worker_loop() {
    std::uint64_t seen = 0;
    while (true) {
      // Spin briefly before blocking: dispatch latency, not throughput,
      // dominates the fine-grained phases on small problems.
      bool ready = false;
      for (int spin = 0; spin < 4096; ++spin) {
        if (generation_atomic_.load(std::memory_order_acquire) != seen ||
            shutdown_atomic_.load(std::memory_order_acquire)) {
          ready = true;
          break;
        }
      }
      std::shared_ptr<Job> job;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        if (!ready) {
          wake_.wait(lock, [&] { return shutdown_ || generation_ != seen; });
        }
        if (shutdown_) return;
        if (generation_ == seen) continue;
        seen = generation_;
        job = job_;
      }
      if (job) run_job(*job);
    }
  }

  void run_job(Job& job) {
    while (true) {
      const int i = job.next.fetch_add(1, std::memory_order_relaxed);
      if (i >= job.items) break;
      try {
        (*job.fn)(i);
      } catch (...) {
        std::unique_lock<std::mutex> lock(job.error_mutex);
        if (!job.error) job.error = std::current_exception();
      }
      if (job.remaining.fetch_sub(1, std::memory_order_acq_rel) == 1) {
        std::unique_lock<std::mutex> lock(mutex_);
        done_.notify_all();
      }
    }
  }

  int workers_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  std::shared_ptr<Job> job_;
  std::uint64_t generation_ = 0;
  bool shutdown_ = false;
  std::atomic<std::uint64_t> generation_atomic_{0};
  std::atomic<bool> shutdown_atomic_{false};
};

}  // namespace trajgame
