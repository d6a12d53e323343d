#include "kickgen/common/threading.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace kickgen {

namespace {

// Tensor workloads allocate and free multi-megabyte buffers every op. With
// glibc defaults those go through mmap/munmap and every reuse pays a page
// fault per 4 KiB. Keeping large blocks on the heap removes that cost.
struct MallocTuning {
  MallocTuning() {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
    mallopt(M_TRIM_THRESHOLD, 256 * 1024 * 1024);
#endif
  }
};
const MallocTuning malloc_tuning;

}  // namespace

namespace {

// All mutable scheduling state lives in the job itself, so a worker that
// wakes late can only ever drain an exhausted job, never a fresh one.
struct Job {
  const std::function<void(std::size_t)>* fn = nullptr;
  std::size_t total = 0;
  std::size_t chunk = 1;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
};

}  // namespace

struct ThreadPool::Impl {
  std::mutex mu;
  std::condition_variable cv_work;
  std::condition_variable cv_done;
  std::shared_ptr<Job> job;  // guarded by mu
  std::uint64_t generation = 0;
  bool stop = false;
  std::vector<std::thread> workers;

  void drain(Job& j) {
    while (true) {
      const std::size_t begin = j.next.fetch_add(j.chunk);
      if (begin >= j.total) break;
      const std::size_t end = std::min(j.total, begin + j.chunk);
      for (std::size_t i = begin; i < end; ++i) (*j.fn)(i);
      if (j.done.fetch_add(end - begin) + (end - begin) == j.total) {
        std::lock_guard lock(mu);
        cv_done.notify_all();
      }
    }
  }

  void worker_loop() {
    std::uint64_t seen = 0;
    while (true) {
      std::shared_ptr<Job> j;
      {
        std::unique_lock lock(mu);
        cv_work.wait(lock, [&] { return stop || generation != seen; });
        if (stop) return;
        seen = generation;
        j = job;
      }
      if (j) drain(*j);
    }
  }
};

ThreadPool::ThreadPool() : impl_(new Impl) {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("KICKGEN_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) n = v;
  }
  nthreads_ = n > 0 ? n : 1;
  for (int i = 1; i < nthreads_; ++i) {
    impl_->workers.emplace_back([this] { impl_->worker_loop(); });
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard lock(impl_->mu);
    impl_->stop = true;
    impl_->cv_work.notify_all();
  }
  for (auto& t : impl_->workers) t.join();
  delete impl_;
}

ThreadPool& ThreadPool::instance() {
  static ThreadPool pool;
  return pool;
}

void ThreadPool::parallel_for(std::size_t n,
                              const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  if (nthreads_ <= 1 || n < 4) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  auto job = std::make_shared<Job>();
  job->fn = &fn;
  job->total = n;
  job->chunk =
      std::max<std::size_t>(1, n / (static_cast<std::size_t>(nthreads_) * 4));
  {
    std::lock_guard lock(impl_->mu);
    impl_->job = job;
    ++impl_->generation;
    impl_->cv_work.notify_all();
  }
  impl_->drain(*job);
  {
    std::unique_lock lock(impl_->mu);
    impl_->cv_done.wait(lock, [&] { return job->done.load() == job->total; });
    if (impl_->job == job) impl_->job.reset();
  }
  // `fn` may now be destroyed: every item is done and any late worker will
  // see the job exhausted before touching fn.
}

}  // namespace kickgen
