#include "sdrnet/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sdrnet {

namespace {

std::atomic<int> g_threads{0};  // 0 means "not set yet": use hardware count

int effective_threads() {
    int n = g_threads.load(std::memory_order_relaxed);
    if (n > 0) return n;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Lazily started pool of effective_threads()-1 workers; the calling thread
// always takes the first range itself. The pool is created on first parallel
// use and lives for the process. Tasks are one-shot closures.
class Pool {
public:
    static Pool& instance() {
        static Pool pool;
        return pool;
    }

    void ensure_workers(int count) {
        std::lock_guard<std::mutex> lock(mu_);
        while (static_cast<int>(workers_.size()) < count) {
            workers_.emplace_back([this] { worker_loop(); });
        }
    }

    void submit(std::function<void()> task) {
        {
            std::lock_guard<std::mutex> lock(mu_);
            tasks_.push_back(std::move(task));
        }
        cv_.notify_one();
    }

private:
    Pool() = default;

    // Workers are detached at process exit; the loop only blocks on the
    // condition variable, so leaking them at shutdown is safe.
    ~Pool() {
        for (auto& w : workers_) w.detach();
    }

    void worker_loop() {
        for (;;) {
            std::function<void()> task;
            {
                std::unique_lock<std::mutex> lock(mu_);
                cv_.wait(lock, [this] { return !tasks_.empty(); });
                task = std::move(tasks_.back());
                tasks_.pop_back();
            }
            task();
        }
    }

    std::mutex mu_;
    std::condition_variable cv_;
    std::vector<std::function<void()>> tasks_;
    std::vector<std::thread> workers_;
};

}  // namespace

int parallel_threads() { return effective_threads(); }

void set_parallel_threads(int n) {
    g_threads.store(n < 1 ? 1 : n, std::memory_order_relaxed);
}

void parallel_for(std::size_t n, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    if (grain == 0) grain = 1;

    const int threads = effective_threads();
    const std::size_t max_ranges = (n + grain - 1) / grain;
    const std::size_t ranges =
        std::min<std::size_t>(static_cast<std::size_t>(threads), max_ranges);

    if (ranges <= 1) {
        fn(0, n);
        return;
    }

    // Contiguous near-equal split; range r covers [bounds[r], bounds[r+1]).
    std::vector<std::size_t> bounds(ranges + 1);
    for (std::size_t r = 0; r <= ranges; ++r) {
        bounds[r] = n * r / ranges;
    }

    Pool& pool = Pool::instance();
    pool.ensure_workers(static_cast<int>(ranges) - 1);

    std::mutex done_mu;
    std::condition_variable done_cv;
    std::size_t remaining = ranges - 1;
    std::vector<std::exception_ptr> errors(ranges);

    for (std::size_t r = 1; r < ranges; ++r) {
        pool.submit([&, r] {
            try {
                fn(bounds[r], bounds[r + 1]);
            } catch (...) {
                errors[r] = std::current_exception();
            }
            {
                std::lock_guard<std::mutex> lock(done_mu);
                --remaining;
            }
            done_cv.notify_one();
        });
    }

    try {
        fn(bounds[0], bounds[1]);
    } catch (...) {
        errors[0] = std::current_exception();
    }

    {
        std::unique_lock<std::mutex> lock(done_mu);
        done_cv.wait(lock, [&] { return remaining == 0; });
    }

    for (const auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }
}

}  // namespace sdrnet
