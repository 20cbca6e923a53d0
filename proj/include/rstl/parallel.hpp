#pragma once

// Minimal fork-join worker pool.  Tasks are indexed; run() blocks until all
// indices are processed and every worker has left the task loop, so shared
// run state is never observed stale.  With n_workers == 1 everything
// executes inline on the calling thread, which keeps single-worker timings
// honest.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rstl {

class ThreadPool {
public:
    explicit ThreadPool(int n_workers) : n_workers_(n_workers < 1 ? 1 : n_workers) {
        for (int i = 0; i + 1 < n_workers_; ++i) {
            threads_.emplace_back([this] { worker_loop(); });
        }
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    ~ThreadPool() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    int workers() const { return n_workers_; }

    // Calls fn(i) for every i in [0, n_tasks).  Rethrows the first task
    // exception on the caller after the run drains.  Not reentrant.
    void run(int n_tasks, const std::function<void(int)>& fn) {
        if (n_tasks <= 0) return;
        if (threads_.empty()) {
            for (int i = 0; i < n_tasks; ++i) fn(i);
            return;
        }
        {
            std::lock_guard<std::mutex> lock(mutex_);
            fn_ = &fn;
            n_tasks_ = n_tasks;
            next_.store(0, std::memory_order_relaxed);
            remaining_.store(n_tasks, std::memory_order_relaxed);
            error_ = nullptr;
            ++generation_;
        }
        cv_.notify_all();
        work();
        {
            std::unique_lock<std::mutex> lock(mutex_);
            done_cv_.wait(lock, [this] {
                return remaining_.load(std::memory_order_acquire) == 0 && active_ == 0;
            });
            fn_ = nullptr;
            if (error_) std::rethrow_exception(error_);
        }
    }

private:
    void worker_loop() {
        std::uint64_t seen = 0;
        for (;;) {
            {
                std::unique_lock<std::mutex> lock(mutex_);
                cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
                if (stop_) return;
                seen = generation_;
                ++active_;
            }
            work();
            {
                std::lock_guard<std::mutex> lock(mutex_);
                --active_;
                if (active_ == 0 && remaining_.load(std::memory_order_acquire) == 0) {
                    done_cv_.notify_all();
                }
            }
        }
    }

    void work() {
        for (;;) {
            const int i = next_.fetch_add(1, std::memory_order_relaxed);
            if (i >= n_tasks_) return;
            try {
                (*fn_)(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mutex_);
                if (!error_) error_ = std::current_exception();
            }
            if (remaining_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
                std::lock_guard<std::mutex> lock(mutex_);
                done_cv_.notify_all();
            }
        }
    }

    int n_workers_;
    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    const std::function<void(int)>* fn_ = nullptr;
    int n_tasks_ = 0;
    int active_ = 0;
    std::atomic<int> next_{0};
    std::atomic<int> remaining_{0};
    std::uint64_t generation_ = 0;
    bool stop_ = false;
    std::exception_ptr error_;
};

}  // namespace rstl
