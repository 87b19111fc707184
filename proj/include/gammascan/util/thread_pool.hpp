#pragma once

#include <condition_variable>
#include <deque>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <variant>
#include <vector>

namespace gammascan::util {

// Fixed-size worker pool. Tasks are plain void() closures; result plumbing
// is done by the parallel_map helper below so that aggregation stays in
// deterministic index order regardless of completion order.
class ThreadPool {
public:
    explicit ThreadPool(unsigned workers) {
        if (workers == 0) workers = 1;
        threads_.reserve(workers);
        for (unsigned i = 0; i < workers; ++i) {
            threads_.emplace_back([this] { run(); });
        }
    }

    ~ThreadPool() {
        {
            std::lock_guard lock(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    void submit(std::function<void()> task) {
        {
            std::lock_guard lock(mu_);
            queue_.push_back(std::move(task));
        }
        cv_.notify_one();
    }

    unsigned size() const { return static_cast<unsigned>(threads_.size()); }

private:
    void run() {
        for (;;) {
            std::function<void()> task;
            {
                std::unique_lock lock(mu_);
                cv_.wait(lock, [this] { return stop_ || !queue_.empty(); });
                if (stop_ && queue_.empty()) return;
                task = std::move(queue_.front());
                queue_.pop_front();
            }
            task();
        }
    }

    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::function<void()>> queue_;
    bool stop_ = false;
    std::vector<std::thread> threads_;
};

template <typename T>
using Outcome = std::variant<T, std::exception_ptr>;

// Evaluates fn(0..n-1), on the pool when one is given, and returns outcomes
// indexed by input position. Callers decide how to surface errors; picking
// the lowest-index failure keeps behavior independent of scheduling.
// Must not be called from inside a task running on the same pool.
template <typename T, typename Fn>
std::vector<Outcome<T>> parallel_map(ThreadPool* pool, std::size_t n, Fn&& fn) {
    std::vector<Outcome<T>> results(n, Outcome<T>{std::exception_ptr{}});
    if (pool == nullptr || pool->size() <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                results[i] = Outcome<T>{std::in_place_index<0>, fn(i)};
            } catch (...) {
                results[i] = Outcome<T>{std::current_exception()};
            }
        }
        return results;
    }

    std::mutex mu;
    std::condition_variable done_cv;
    std::size_t done = 0;
    for (std::size_t i = 0; i < n; ++i) {
        pool->submit([&, i] {
            Outcome<T> out{std::exception_ptr{}};
            try {
                out = Outcome<T>{std::in_place_index<0>, fn(i)};
            } catch (...) {
                out = Outcome<T>{std::current_exception()};
            }
            std::lock_guard lock(mu);
            results[i] = std::move(out);
            ++done;
            if (done == n) done_cv.notify_all();
        });
    }
    std::unique_lock lock(mu);
    done_cv.wait(lock, [&] { return done == n; });
    return results;
}

// Rethrows the lowest-index failure, if any.
template <typename T>
void rethrow_first_error(const std::vector<Outcome<T>>& outcomes) {
    for (const auto& o : outcomes) {
        if (o.index() == 1) std::rethrow_exception(std::get<1>(o));
    }
}

}  // namespace gammascan::util
