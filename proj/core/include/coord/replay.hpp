#pragma once

// Graph experience buffer: ring storage of variable-size graph transitions
// and mini-batch collation by diagonal adjacency stacking.

#include <cstdint>
#include <vector>

#include "coord/embedder.hpp"
#include "coord/environment.hpp"
#include "coord/rng.hpp"
#include "coord/simulator.hpp"

namespace coord::replay {

struct Transition {
  env::Observation obs;
  sim::SchedulingTensor action;  // post-processed
  double reward = 0.0;
  env::Observation next_obs;
  bool done = false;
};

inline constexpr size_t kDefaultCapacity = 10000;

class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity = kDefaultCapacity);

  void store(Transition t);  // FIFO eviction at capacity
  size_t size() const { return storage_.size(); }
  size_t capacity() const { return capacity_; }
  const Transition& at(size_t i) const { return storage_[i]; }

  // Uniform without replacement within one batch.
  std::vector<size_t> sample_indices(size_t batch_size, Rng& rng) const;
  std::vector<Transition> sample(size_t batch_size, Rng& rng) const;

 private:
  size_t capacity_;
  size_t cursor_ = 0;  // next slot to overwrite once full
  std::vector<Transition> storage_;
};

// One collated mini-batch. Graph parts are stacked with node-index offsets;
// actions and masks are fixed-size rows, so they stack densely.
struct GraphBatch {
  gnn::BatchedGraph obs_graph;
  gnn::BatchedGraph next_graph;
  diff::Tensor actions;     // S x (n * v_max * v_max)
  diff::Tensor masks;       // S x (n * v_max * v_max), 0/1
  diff::Tensor next_masks;  // S x (n * v_max * v_max)
  std::vector<double> rewards;
  std::vector<uint8_t> dones;

  int batch_size() const { return static_cast<int>(rewards.size()); }
};

GraphBatch collate(const std::vector<Transition>& transitions);

// Mask bytes as a 1 x (n * v_max * v_max) double row (shared helper).
std::vector<double> mask_to_doubles(const topo::ActionMask& mask);

}  // namespace coord::replay
