#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "huca/errors.hpp"
#include "huca/rng.hpp"

namespace huca::trainer {

// Ring buffer with FIFO eviction and uniform without-replacement sampling.
template <typename T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    entries_.reserve(capacity);
  }

  void push(T item) {
    if (entries_.size() < capacity_) {
      entries_.push_back(std::move(item));
    } else {
      entries_[cursor_] = std::move(item);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool full() const { return entries_.size() == capacity_; }

  // k-th oldest entry still stored.
  const T& oldest(std::size_t k) const {
    if (k >= entries_.size()) throw DomainError("replay index out of range");
    if (!full()) return entries_[k];
    return entries_[(cursor_ + k) % capacity_];
  }

  // Uniform distinct indices in randomized order (partial Fisher-Yates).
  std::vector<T> sample(Rng& rng, std::size_t batch_size) const {
    if (batch_size > entries_.size())
      throw Underfull("batch of " + std::to_string(batch_size) +
                      " from buffer of " + std::to_string(entries_.size()));
    std::vector<std::size_t> idx(entries_.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<T> batch;
    batch.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
      const std::size_t j = static_cast<std::size_t>(
          rng.uniform_int(static_cast<std::int64_t>(i),
                          static_cast<std::int64_t>(idx.size()) - 1));
      std::swap(idx[i], idx[j]);
      batch.push_back(entries_[idx[i]]);
    }
    return batch;
  }

 private:
  std::size_t capacity_;
  std::vector<T> entries_;
  std::size_t cursor_ = 0;
};

}  // namespace huca::trainer
