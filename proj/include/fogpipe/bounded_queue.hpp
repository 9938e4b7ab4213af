#ifndef FOGPIPE_BOUNDED_QUEUE_HPP_
#define FOGPIPE_BOUNDED_QUEUE_HPP_

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace fogpipe {

// Blocking MPSC/MPMC queue used for every stage handoff in the run
// topology. push() blocks while the queue is full, so upstream stages
// get backpressure instead of dropping tuples.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  void push(T item) {
    std::unique_lock<std::mutex> lock(mutex_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) throw std::runtime_error("push on closed queue");
    items_.push_back(std::move(item));
    not_empty_.notify_one();
  }

  // Blocks until an item is available or the queue is closed and drained.
  bool pop(T& out) {
    std::unique_lock<std::mutex> lock(mutex_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return false;
    out = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return true;
  }

  void close() {
    std::lock_guard<std::mutex> lock(mutex_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

 private:
  const size_t capacity_;
  std::mutex mutex_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<T> items_;
  bool closed_ = false;
};

}  // namespace fogpipe

#endif  // FOGPIPE_BOUNDED_QUEUE_HPP_
