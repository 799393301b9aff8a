#pragma once

// Minimal reverse-mode differentiation substrate: double-precision tensors,
// a dynamically recorded tape, the layer ops needed for message passing
// (dense, activations, segment softmax/aggregation, gather), and Adam.
//
// The tape is rebuilt on every forward pass; graph shapes may change between
// passes. backward() accumulates into .grad of every reachable tensor that
// requires gradients; Adam::step consumes and resets those gradients.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "coord/rng.hpp"

namespace coord::diff {

struct Node {
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on demand, same size as value
  bool needs_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // pushes this->grad into parents

  size_t numel() const {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return n;
  }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor from_values(std::vector<int> shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape.at(static_cast<size_t>(i)); }
  int rows() const { return node_->shape.empty() ? 1 : node_->shape[0]; }
  int cols() const { return node_->shape.size() < 2 ? 1 : node_->shape[1]; }
  size_t numel() const { return node_->numel(); }
  bool requires_grad() const { return node_->needs_grad; }

  const std::vector<double>& values() const { return node_->value; }
  std::vector<double>& values() { return node_->value; }
  const std::vector<double>& grad() const { return node_->grad; }
  std::vector<double>& grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

  double item() const;               // scalar tensors only
  double at(int i) const { return node_->value.at(static_cast<size_t>(i)); }
  double at(int i, int j) const {
    return node_->value.at(static_cast<size_t>(i) * cols() + j);
  }

  std::shared_ptr<Node> node() const { return node_; }
  static Tensor wrap(std::shared_ptr<Node> n) {
    Tensor t;
    t.node_ = std::move(n);
    return t;
  }

 private:
  std::shared_ptr<Node> node_;
};

// ---- ops -------------------------------------------------------------------

// x [m x in] * w [in x out] + optional rowwise bias [out]
Tensor dense(const Tensor& x, const Tensor& w, const Tensor& bias);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);            // same shape
Tensor add_rowwise(const Tensor& a, const Tensor& bias);  // bias over columns
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double c);

Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);
Tensor sigmoid(const Tensor& x);

// Softmax computed independently inside each segment. scores holds one entry
// per element (shape [E] or [E x 1]); segment ids map entries to segments.
// Segments with no entries simply contribute no outputs.
Tensor softmax_segments(const Tensor& scores, const std::vector<int>& segment_ids,
                        int num_segments);

enum class Reduce { kSum, kMean };
// messages [E x d] reduced per destination into [num_segments x d].
Tensor segment_aggregate(const Tensor& messages, const std::vector<int>& segment_ids,
                         int num_segments, Reduce mode);

Tensor gather_rows(const Tensor& x, const std::vector<int>& row_ids);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor scale_rows(const Tensor& x, const Tensor& per_row);  // per_row numel == rows
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Scalar loss only; populates .grad on every reachable tensor requiring grad.
void backward(const Tensor& loss);

// While alive on a thread, ops do not record the tape (forward values only).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};
bool grad_enabled();

// ---- parameters ------------------------------------------------------------

class ParameterSet {
 public:
  // Uniform fan-in initialization: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Tensor& create(const std::string& name, std::vector<int> shape, int fan_in, Rng& rng);
  Tensor& create_zeros(const std::string& name, std::vector<int> shape);

  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  const std::vector<std::string>& names() const { return order_; }
  size_t total_parameters() const;

  void zero_grads();
  ParameterSet clone() const;  // deep copy, bit-identical values
  void copy_values_from(const ParameterSet& other);

  uint64_t init_seed = 0;
  std::string init_scheme = "uniform-fan-in";
  uint64_t step_count = 0;

  // Text manifest at <path>.manifest, raw little-endian doubles at <path>.bin.
  void save(const std::string& path_stem) const;
  static ParameterSet load(const std::string& path_stem);

 private:
  std::map<std::string, Tensor> params_;
  std::vector<std::string> order_;
};

// theta' <- tau * theta + (1 - tau) * theta', for every parameter.
void soft_update(const ParameterSet& online, ParameterSet& target, double tau);

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Applies one bias-corrected step from the accumulated gradients, then
  // resets them (gradients are per-step, not carried across steps).
  void step(ParameterSet& params);
  uint64_t steps_taken() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  uint64_t t_ = 0;
  std::map<std::string, std::vector<double>> m_, v_;
};

}  // namespace coord::diff
