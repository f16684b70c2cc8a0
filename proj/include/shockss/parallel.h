// Minimal persistent thread pool for data-parallel loops over grid slabs.
//
// Thread count comes from SHOCKSS_THREADS (default: hardware concurrency).
// parallel_reduce folds per-item partial results in item order, so every
// reduction is bit-identical at any thread count.
#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace shockss {

class ThreadPool {
  public:
    static ThreadPool& instance()
    {
        static ThreadPool pool;
        return pool;
    }

    int size() const { return static_cast<int>(workers_.size()) + 1; }

    // body(i) for i in [0, n), dynamically scheduled; the caller participates.
    void run(int n, const std::function<void(int)>& body)
    {
        if (n <= 0) return;
        if (size() == 1 || n == 1) {
            for (int i = 0; i < n; ++i) body(i);
            return;
        }
        std::unique_lock<std::mutex> lk(mu_);
        body_ = &body;
        next_.store(0, std::memory_order_relaxed);
        limit_ = n;
        ++epoch_;
        pending_ = static_cast<int>(workers_.size());
        cv_.notify_all();
        lk.unlock();
        work();
        lk.lock();
        done_cv_.wait(lk, [&] { return pending_ == 0; });
        body_ = nullptr;
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

  private:
    ThreadPool()
    {
        int n = 0;
        if (const char* env = std::getenv("SHOCKSS_THREADS")) n = std::atoi(env);
        if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
        if (n <= 0) n = 1;
        for (int i = 0; i < n - 1; ++i) {
            workers_.emplace_back([this] { loop(); });
        }
    }

    ~ThreadPool()
    {
        {
            std::lock_guard<std::mutex> lk(mu_);
            stop_ = true;
            cv_.notify_all();
        }
        for (auto& w : workers_) w.join();
    }

    void loop()
    {
        long seen = 0;
        for (;;) {
            std::unique_lock<std::mutex> lk(mu_);
            cv_.wait(lk, [&] { return stop_ || epoch_ != seen; });
            if (stop_) return;
            seen = epoch_;
            lk.unlock();
            work();
            lk.lock();
            if (--pending_ == 0) done_cv_.notify_all();
        }
    }

    void work()
    {
        for (;;) {
            const int i = next_.fetch_add(1, std::memory_order_relaxed);
            if (i >= limit_) return;
            (*body_)(i);
        }
    }

    std::vector<std::thread> workers_;
    std::mutex mu_;
    std::condition_variable cv_, done_cv_;
    const std::function<void(int)>* body_ = nullptr;
    std::atomic<int> next_{0};
    int limit_ = 0;
    long epoch_ = 0;
    int pending_ = 0;
    bool stop_ = false;
};

inline void parallel_for(int n, const std::function<void(int)>& body)
{
    ThreadPool::instance().run(n, body);
}

// acc = fold(acc, body(i)) over i in [0, n), folded in item order.
template <class T, class Body, class Fold>
T parallel_reduce(int n, T init, const Body& body, const Fold& fold)
{
    std::vector<T> part(static_cast<std::size_t>(n > 0 ? n : 0));
    parallel_for(n, [&](int i) { part[static_cast<std::size_t>(i)] = body(i); });
    T acc = init;
    for (const T& p : part) acc = fold(acc, p);
    return acc;
}

}  // namespace shockss
