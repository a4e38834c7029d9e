#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "pbvf/numerics.hpp"

namespace pbvf {

// One environment step. theta_tilde is shared by every transition of the
// episode (or fragment) that produced it.
struct TransitionRecord {
  Vector s;
  Vector a;  // pre-squash u for the gaussian head
  std::shared_ptr<const Vector> theta_tilde;
  double behavior_log_prob = 0.0;
  double r = 0.0;
  Vector s_next;
  // s_next is a terminal state; time-limit truncation does not set this.
  bool terminal = false;
};

// (theta_tilde, undiscounted episode return) for the PSSVF.
struct ReturnRecord {
  std::shared_ptr<const Vector> theta_tilde;
  double episode_return = 0.0;
};

// Fixed-capacity FIFO ring buffer with uniform sampling with replacement.
template <typename T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw InputError("replay buffer: capacity must be positive");
    items_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  void push(T item) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
    } else {
      items_[head_] = std::move(item);
      head_ = (head_ + 1) % capacity_;
    }
  }

  // i = 0 is the oldest record still stored.
  const T& operator[](std::size_t i) const { return items_[(head_ + i) % items_.size()]; }

  std::vector<std::size_t> sample_indices(std::size_t n, SeededRng& rng) const {
    if (items_.empty()) throw InputError("replay buffer: cannot sample from an empty buffer");
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = rng.uniform_index(items_.size());
    return idx;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<T> items_;
};

}  // namespace pbvf
