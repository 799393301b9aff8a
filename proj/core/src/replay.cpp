#include "coord/replay.hpp"

#include <numeric>

#include "coord/errors.hpp"

namespace coord::replay {

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ContractViolation("buffer capacity must be positive");
  storage_.reserve(capacity);
}

void ReplayBuffer::store(Transition t) {
  if (storage_.size() < capacity_) {
    storage_.push_back(std::move(t));
  } else {
    storage_[cursor_] = std::move(t);
    cursor_ = (cursor_ + 1) % capacity_;
  }
}

std::vector<size_t> ReplayBuffer::sample_indices(size_t batch_size, Rng& rng) const {
  if (batch_size > storage_.size())
    throw ContractViolation("not enough stored transitions to sample a batch");
  // partial Fisher-Yates: first batch_size entries of a random permutation
  std::vector<size_t> idx(storage_.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (size_t i = 0; i < batch_size; ++i) {
    const size_t j = i + rng.below(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(batch_size);
  return idx;
}

std::vector<Transition> ReplayBuffer::sample(size_t batch_size, Rng& rng) const {
  std::vector<Transition> out;
  out.reserve(batch_size);
  for (size_t i : sample_indices(batch_size, rng)) out.push_back(storage_[i]);
  return out;
}

std::vector<double> mask_to_doubles(const topo::ActionMask& mask) {
  std::vector<double> v(mask.valid.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = mask.valid[i] ? 1.0 : 0.0;
  return v;
}

GraphBatch collate(const std::vector<Transition>& transitions) {
  if (transitions.empty()) throw ContractViolation("cannot collate an empty batch");

  const int n = transitions.front().action.n;
  const int v_max = transitions.front().action.v_max;
  const size_t a = static_cast<size_t>(n) * v_max * v_max;
  for (const auto& t : transitions) {
    if (t.action.n != n || t.action.v_max != v_max || t.obs.mask.n != n ||
        t.obs.mask.v_max != v_max || t.next_obs.mask.n != n ||
        t.next_obs.mask.v_max != v_max)
      throw ContractViolation("mixed action/mask shapes in one batch");
  }

  GraphBatch batch;
  const int s = static_cast<int>(transitions.size());
  std::vector<const env::Observation*> obs_list, next_list;
  obs_list.reserve(transitions.size());
  next_list.reserve(transitions.size());
  std::vector<double> actions(static_cast<size_t>(s) * a);
  std::vector<double> masks(static_cast<size_t>(s) * a);
  std::vector<double> next_masks(static_cast<size_t>(s) * a);
  for (int i = 0; i < s; ++i) {
    const Transition& t = transitions[static_cast<size_t>(i)];
    obs_list.push_back(&t.obs);
    next_list.push_back(&t.next_obs);
    std::copy(t.action.x.begin(), t.action.x.end(), actions.begin() + i * a);
    for (size_t k = 0; k < a; ++k) {
      masks[i * a + k] = t.obs.mask.valid[k] ? 1.0 : 0.0;
      next_masks[i * a + k] = t.next_obs.mask.valid[k] ? 1.0 : 0.0;
    }
    batch.rewards.push_back(t.reward);
    batch.dones.push_back(t.done ? 1 : 0);
  }
  batch.obs_graph = gnn::BatchedGraph::from_observations(obs_list);
  batch.next_graph = gnn::BatchedGraph::from_observations(next_list);
  batch.actions = diff::Tensor::from_values({s, static_cast<int>(a)}, std::move(actions));
  batch.masks = diff::Tensor::from_values({s, static_cast<int>(a)}, std::move(masks));
  batch.next_masks =
      diff::Tensor::from_values({s, static_cast<int>(a)}, std::move(next_masks));
  return batch;
}

}  // namespace coord::replay
