#pragma once

#include <cstddef>
#include <functional>

namespace kickgen {

/// Process-wide worker pool for data-parallel loops over tensor rows.
/// Every work item writes a disjoint output region and any reduction happens
/// serially inside one item, so scheduling never affects results.
class ThreadPool {
 public:
  static ThreadPool& instance();

  /// Runs fn(i) for every i in [0, n); blocks until all items are done.
  /// Small loops and single-threaded pools run inline on the caller.
  void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

  int thread_count() const { return nthreads_; }

 private:
  ThreadPool();
  ~ThreadPool();
  ThreadPool(const ThreadPool&) = delete;

  struct Impl;
  Impl* impl_;
  int nthreads_;
};

}  // namespace kickgen
