#include "volsr/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <thread>
#include <vector>

namespace volsr {
namespace {

int g_threads = 0;

int resolved_threads() {
  if (g_threads > 0) return g_threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Minimal persistent pool. Workers pick up one chunk each per job; chunk
// boundaries depend only on (n, worker count).
class Pool {
public:
  explicit Pool(int workers) : workers_(workers) {
    for (int i = 1; i < workers_; ++i) {
      threads_.emplace_back([this, i] { worker_loop(i); });
    }
  }

  ~Pool() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      stop_ = true;
      ++job_id_;
    }
    cv_.notify_all();
    for (auto &t : threads_) t.join();
  }

  void run(std::int64_t n,
           const std::function<void(std::int64_t, std::int64_t)> &fn) {
    {
      std::lock_guard<std::mutex> lk(mu_);
      job_n_ = n;
      job_fn_ = &fn;
      pending_ = workers_ - 1;
      ++job_id_;
    }
    cv_.notify_all();
    run_chunk(0, n, fn);
    std::unique_lock<std::mutex> lk(mu_);
    done_cv_.wait(lk, [this] { return pending_ == 0; });
  }

  int workers() const { return workers_; }

private:
  void run_chunk(int worker, std::int64_t n,
                 const std::function<void(std::int64_t, std::int64_t)> &fn) {
    const std::int64_t chunk = (n + workers_ - 1) / workers_;
    const std::int64_t b = worker * chunk;
    const std::int64_t e = std::min<std::int64_t>(n, b + chunk);
    if (b < e) fn(b, e);
  }

  void worker_loop(int worker) {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(std::int64_t, std::int64_t)> *fn = nullptr;
      std::int64_t n = 0;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [&] { return job_id_ != seen; });
        seen = job_id_;
        if (stop_) return;
        fn = job_fn_;
        n = job_n_;
      }
      run_chunk(worker, n, *fn);
      {
        std::lock_guard<std::mutex> lk(mu_);
        if (--pending_ == 0) done_cv_.notify_all();
      }
    }
  }

  int workers_;
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  std::uint64_t job_id_ = 0;
  std::int64_t job_n_ = 0;
  const std::function<void(std::int64_t, std::int64_t)> *job_fn_ = nullptr;
  int pending_ = 0;
  bool stop_ = false;
};

Pool *g_pool = nullptr;
std::mutex g_pool_mu;

Pool &pool() {
  std::lock_guard<std::mutex> lk(g_pool_mu);
  const int want = resolved_threads();
  if (g_pool == nullptr || g_pool->workers() != want) {
    delete g_pool;
    g_pool = new Pool(want);
  }
  return *g_pool;
}

} // namespace

void set_thread_count(int n) { g_threads = n < 0 ? 0 : n; }

int thread_count() { return resolved_threads(); }

void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t)> &fn) {
  if (n <= 0) return;
  if (resolved_threads() == 1) {
    fn(0, n);
    return;
  }
  pool().run(n, fn);
}

} // namespace volsr
