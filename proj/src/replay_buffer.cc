#include "carfollow/replay_buffer.h"

#include "carfollow/errors.h"

namespace carfollow {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::Add(Transition transition) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(transition));
  } else {
    items_[cursor_] = std::move(transition);
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::SampleIndices(std::size_t batch_size,
                                                     std::mt19937_64& rng) const {
  if (items_.empty()) throw TrainingError("cannot sample from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<std::size_t> out(batch_size);
  for (auto& idx : out) idx = pick(rng);
  return out;
}

std::vector<const Transition*> ReplayBuffer::Sample(std::size_t batch_size,
                                                    std::mt19937_64& rng) const {
  std::vector<const Transition*> out;
  out.reserve(batch_size);
  for (std::size_t idx : SampleIndices(batch_size, rng)) out.push_back(&items_[idx]);
  return out;
}

}  // namespace carfollow
