#pragma once

#include <atomic>
#include <condition_variable>
#include <functional>
#include <future>
#include <mutex>
#include <queue>
#include <thread>
#include <vector>

namespace gasdsr {

/// Fixed-size worker pool. Tasks may block on other tasks' futures only if
/// those were submitted earlier; evaluation drivers submit flat batches.
class ThreadPool {
public:
    explicit ThreadPool(int threads) {
        const int n = std::max(1, threads);
        workers_.reserve(n);
        for (int i = 0; i < n; ++i) {
            workers_.emplace_back([this] { run(); });
        }
    }

    ~ThreadPool() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            done_ = true;
        }
        wake_.notify_all();
        for (auto& w : workers_) w.join();
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    template <typename F>
    auto submit(F&& fn) -> std::future<decltype(fn())> {
        using R = decltype(fn());
        auto task = std::make_shared<std::packaged_task<R()>>(std::forward<F>(fn));
        std::future<R> fut = task->get_future();
        {
            std::lock_guard<std::mutex> lock(mutex_);
            queue_.emplace([task] { (*task)(); });
        }
        wake_.notify_one();
        return fut;
    }

    int size() const { return static_cast<int>(workers_.size()); }

private:
    void run() {
        for (;;) {
            std::function<void()> task;
            {
                std::unique_lock<std::mutex> lock(mutex_);
                wake_.wait(lock, [this] { return done_ || !queue_.empty(); });
                if (done_ && queue_.empty()) return;
                task = std::move(queue_.front());
                queue_.pop();
            }
            task();
        }
    }

    std::vector<std::thread> workers_;
    std::queue<std::function<void()>> queue_;
    std::mutex mutex_;
    std::condition_variable wake_;
    bool done_ = false;
};

/// Run fn(i) for i in [0, count) across `threads` workers; rethrows the first
/// task exception after all workers finish.
template <typename F>
void parallel_for(int count, int threads, F&& fn) {
    if (count <= 0) return;
    const int n = std::max(1, std::min(threads, count));
    if (n == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> team;
    team.reserve(n);
    for (int w = 0; w < n; ++w) {
        team.emplace_back([&] {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : team) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace gasdsr
