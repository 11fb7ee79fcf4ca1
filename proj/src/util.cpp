#include "mrs/util.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace mrs {

int worker_count() {
    static int n = [] {
        int hw = int(std::thread::hardware_concurrency());
        if (hw < 1) hw = 1;
        if (const char* env = std::getenv("MRSQUANT_THREADS")) {
            int cap = std::atoi(env);
            if (cap >= 1) hw = std::min(hw, cap);
        }
        return hw;
    }();
    return n;
}

namespace {

thread_local bool tl_inside_task = false;

// Minimal persistent pool: one task at a time, callers block until done.
// Nested calls run inline; concurrent top-level calls serialise.
class Pool {
  public:
    static Pool& instance() {
        // intentionally leaked: workers park on the condition variable for the
        // process lifetime, so running destructors at exit would deadlock
        static Pool* p = new Pool();
        return *p;
    }

    void run(int64_t begin, int64_t end, const std::function<void(int64_t)>& fn) {
        int64_t n = end - begin;
        int workers = std::min<int64_t>(worker_count(), n);
        if (workers <= 1 || tl_inside_task) {
            for (int64_t i = begin; i < end; ++i) fn(i);
            return;
        }
        std::lock_guard<std::mutex> outer(run_mu_);
        ensure_threads(workers - 1);
        std::unique_lock<std::mutex> lock(mu_);
        fn_ = &fn;
        begin_ = begin;
        end_ = end;
        chunk_ = (n + workers - 1) / workers;
        active_ = workers - 1;
        pending_ = workers - 1;
        generation_++;
        cv_start_.notify_all();
        lock.unlock();

        // main thread takes the first chunk
        tl_inside_task = true;
        run_chunk(0);
        tl_inside_task = false;

        lock.lock();
        cv_done_.wait(lock, [&] { return pending_ == 0; });
        fn_ = nullptr;
    }

  private:
    Pool() = default;

    void ensure_threads(int n) {
        while (threads_ < n) {
            const int id = threads_ + 1;
            std::thread([this, id] { worker_loop(id); }).detach();
            ++threads_;
        }
    }

    void run_chunk(int id) {
        int64_t lo = begin_ + int64_t(id) * chunk_;
        int64_t hi = std::min(end_, lo + chunk_);
        for (int64_t i = lo; i < hi; ++i) (*fn_)(i);
    }

    void worker_loop(int id) {
        uint64_t seen = 0;
        for (;;) {
            std::unique_lock<std::mutex> lock(mu_);
            cv_start_.wait(lock, [&] { return generation_ != seen; });
            seen = generation_;
            bool active = id <= active_;
            lock.unlock();
            if (active) {
                tl_inside_task = true;
                run_chunk(id);
                tl_inside_task = false;
                lock.lock();
                if (--pending_ == 0) cv_done_.notify_all();
                lock.unlock();
            }
        }
    }

    int threads_ = 0;
    std::mutex run_mu_;
    std::mutex mu_;
    std::condition_variable cv_start_, cv_done_;
    const std::function<void(int64_t)>* fn_ = nullptr;
    int64_t begin_ = 0, end_ = 0, chunk_ = 0;
    int active_ = 0;
    int pending_ = 0;
    uint64_t generation_ = 0;
};

}  // namespace

void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t)>& fn) {
    if (end <= begin) return;
    Pool::instance().run(begin, end, fn);
}

}  // namespace mrs
