#include "pifcm/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace pifcm {

class ThreadPool {
 public:
  explicit ThreadPool(unsigned workers) {
    threads_.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) {
      threads_.emplace_back([this] { worker_loop(); });
    }
  }

  ~ThreadPool() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    wake_.notify_all();
    for (auto& t : threads_) t.join();
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  unsigned size() const { return static_cast<unsigned>(threads_.size()); }

  void run(std::size_t chunks, const std::function<void(std::size_t)>& fn) {
    if (chunks == 0) return;
    std::lock_guard submit(submit_mutex_);  // one job in flight at a time
    {
      std::lock_guard lock(mutex_);
      job_ = &fn;
      chunks_ = chunks;
      next_.store(0);
      pending_ = chunks;
      error_ = nullptr;
      ++generation_;
    }
    wake_.notify_all();
    std::unique_lock lock(mutex_);
    // Workers that picked up this generation must leave the chunk loop before
    // next_ can be reset for another job.
    done_.wait(lock, [this] { return pending_ == 0 && active_ == 0; });
    job_ = nullptr;
    if (error_) std::rethrow_exception(error_);
  }

 private:
  void worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(std::size_t)>* job = nullptr;
      std::size_t chunks = 0;
      {
        std::unique_lock lock(mutex_);
        wake_.wait(lock, [&] { return stopping_ || generation_ != seen; });
        if (stopping_) return;
        seen = generation_;
        job = job_;
        chunks = chunks_;
        if (job == nullptr) continue;
        ++active_;
      }
      std::size_t finished = 0;
      for (std::size_t c = next_.fetch_add(1); c < chunks; c = next_.fetch_add(1)) {
        try {
          (*job)(c);
        } catch (...) {
          std::lock_guard lock(mutex_);
          if (!error_) error_ = std::current_exception();
        }
        ++finished;
      }
      {
        std::lock_guard lock(mutex_);
        pending_ -= finished;
        --active_;
        if (pending_ == 0 && active_ == 0) done_.notify_all();
      }
    }
  }

  std::vector<std::thread> threads_;
  std::mutex submit_mutex_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t)>* job_ = nullptr;
  std::size_t chunks_ = 0;
  std::atomic<std::size_t> next_{0};
  std::size_t pending_ = 0;
  unsigned active_ = 0;
  std::uint64_t generation_ = 0;
  std::exception_ptr error_;
  bool stopping_ = false;
};

Backend parse_backend(const std::string& text) {
  if (text == "sequential" || text == "seq") return Backend::sequential;
  if (text == "parallel" || text == "par") return Backend::parallel;
  throw std::invalid_argument("unknown backend '" + text + "' (sequential|parallel)");
}

const char* to_string(Backend backend) {
  return backend == Backend::sequential ? "sequential" : "parallel";
}

Executor::Executor() = default;

Executor Executor::parallel(unsigned workers) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  Executor e;
  e.pool_ = std::make_shared<ThreadPool>(workers);
  return e;
}

Executor Executor::make(Backend backend, unsigned workers) {
  return backend == Backend::sequential ? Executor() : parallel(workers);
}

unsigned Executor::workers() const { return pool_ ? pool_->size() : 1u; }

void Executor::for_each_chunk(std::size_t chunks,
                              const std::function<void(std::size_t)>& fn) const {
  if (!pool_) {
    for (std::size_t c = 0; c < chunks; ++c) fn(c);
    return;
  }
  pool_->run(chunks, fn);
}

}  // namespace pifcm
