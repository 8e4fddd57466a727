#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "carfollow/env.h"

namespace carfollow {

// Fixed-capacity FIFO of transitions with uniform sampling (with
// replacement). Once full, each Add overwrites the oldest entry.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void Add(Transition transition);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  const Transition& operator[](std::size_t i) const { return items_[i]; }

  // Indices into the buffer, uniform over stored items.
  std::vector<std::size_t> SampleIndices(std::size_t batch_size, std::mt19937_64& rng) const;
  std::vector<const Transition*> Sample(std::size_t batch_size, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Transition> items_;
};

}  // namespace carfollow
