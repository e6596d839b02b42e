#include "ollga/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace ollga {

struct ThreadPool::Impl {
  std::vector<std::thread> workers;
  std::mutex mutex;
  std::condition_variable wake;
  std::condition_variable done;

  const std::function<void(std::size_t)>* body = nullptr;
  std::size_t begin = 0, end = 0;
  std::atomic<std::size_t> cursor{0};
  std::atomic<int> running{0};
  std::uint64_t generation = 0;
  bool stop = false;
  static thread_local bool inside;

  void worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
      std::unique_lock lock(mutex);
      wake.wait(lock, [&] { return stop || generation != seen; });
      if (stop) return;
      seen = generation;
      lock.unlock();
      run_chunks();
      if (running.fetch_sub(1) == 1) {
        std::lock_guard g(mutex);
        done.notify_all();
      }
    }
  }

  void run_chunks() {
    inside = true;
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= end) break;
      (*body)(i);
    }
    inside = false;
  }
};

thread_local bool ThreadPool::Impl::inside = false;

ThreadPool::ThreadPool(int threads) : impl_(new Impl) {
  int count = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (count < 1) count = 1;
  for (int i = 0; i < count - 1; ++i)
    impl_->workers.emplace_back([this] { impl_->worker_loop(); });
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard g(impl_->mutex);
    impl_->stop = true;
  }
  impl_->wake.notify_all();
  for (auto& w : impl_->workers) w.join();
  delete impl_;
}

int ThreadPool::thread_count() const { return static_cast<int>(impl_->workers.size()) + 1; }

void ThreadPool::parallel_for(std::size_t begin, std::size_t end,
                              const std::function<void(std::size_t)>& body) {
  if (begin >= end) return;
  // Inline when nested, tiny, or single-threaded.
  if (Impl::inside || impl_->workers.empty() || end - begin == 1) {
    for (std::size_t i = begin; i < end; ++i) body(i);
    return;
  }
  {
    std::lock_guard g(impl_->mutex);
    impl_->body = &body;
    impl_->begin = begin;
    impl_->end = end;
    impl_->cursor.store(begin);
    impl_->running.store(static_cast<int>(impl_->workers.size()));
    ++impl_->generation;
  }
  impl_->wake.notify_all();
  impl_->run_chunks();
  std::unique_lock lock(impl_->mutex);
  impl_->done.wait(lock, [&] { return impl_->running.load() == 0; });
  impl_->body = nullptr;
}

namespace {
std::unique_ptr<ThreadPool>& global_slot() {
  static std::unique_ptr<ThreadPool> pool;
  return pool;
}
std::mutex global_mutex;
}  // namespace

ThreadPool& ThreadPool::global() {
  std::lock_guard g(global_mutex);
  if (!global_slot()) global_slot() = std::make_unique<ThreadPool>(0);
  return *global_slot();
}

void ThreadPool::configure_global(int threads) {
  std::lock_guard g(global_mutex);
  global_slot() = std::make_unique<ThreadPool>(threads);
}

}  // namespace ollga
