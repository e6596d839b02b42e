#pragma once

#include <cstddef>
#include <functional>

namespace ollga {

// Fixed-size pool running statically chunked index loops. Work items write to
// disjoint slots and callers reduce sequentially afterwards, so results never
// depend on the number of threads.
class ThreadPool {
 public:
  explicit ThreadPool(int threads = 0);  // 0: hardware concurrency
  ~ThreadPool();
  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int thread_count() const;

  // Calls body(i) for i in [begin, end). Nested calls run inline.
  void parallel_for(std::size_t begin, std::size_t end,
                    const std::function<void(std::size_t)>& body);

  static ThreadPool& global();
  // Replaces the global pool (call before any parallel work starts).
  static void configure_global(int threads);

 private:
  struct Impl;
  Impl* impl_;
};

}  // namespace ollga
