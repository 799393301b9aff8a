#include "coord/diffcore.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "coord/errors.hpp"

namespace coord::diff {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

namespace {

thread_local int no_grad_depth = 0;

std::shared_ptr<Node> make_node(std::vector<int> shape) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value.assign(n->numel(), 0.0);
  return n;
}

size_t check_numel(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ContractViolation("negative tensor dimension");
    n *= static_cast<size_t>(d);
  }
  return n;
}

// result node wiring for an op with the given parents
std::shared_ptr<Node> op_node(std::vector<int> shape,
                              std::vector<std::shared_ptr<Node>> parents,
                              std::function<void(Node&)> backprop) {
  auto n = make_node(std::move(shape));
  bool needs = no_grad_depth == 0;
  if (needs) {
    needs = false;
    for (const auto& p : parents) needs = needs || p->needs_grad;
  }
  if (needs) {
    n->needs_grad = true;
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
  }
  return n;
}

void require(bool cond, const char* msg) {
  if (!cond) throw ContractViolation(msg);
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  check_numel(shape);
  auto n = make_node(std::move(shape));
  n->needs_grad = requires_grad;
  return wrap(n);
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<double> values,
                           bool requires_grad) {
  if (check_numel(shape) != values.size())
    throw ContractViolation("value count does not match shape");
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->needs_grad = requires_grad;
  return wrap(n);
}

Tensor Tensor::scalar(double v) { return from_values({1}, {v}); }

double Tensor::item() const {
  if (numel() != 1) throw ContractViolation("item() on non-scalar tensor");
  return node_->value[0];
}

// ---- ops -------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.shape().size() == 2 && b.shape().size() == 2, "matmul needs 2-d tensors");
  const int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
  require(k == k2, "matmul inner dimensions disagree");
  auto an = a.node(), bn = b.node();
  auto out = op_node({m, n}, {an, bn}, [an, bn, m, k, n](Node& self) {
    ECMap dc(self.grad.data(), m, n);
    if (an->needs_grad) {
      an->ensure_grad();
      EMap da(an->grad.data(), m, k);
      ECMap bv(bn->value.data(), k, n);
      da.noalias() += dc * bv.transpose();
    }
    if (bn->needs_grad) {
      bn->ensure_grad();
      EMap db(bn->grad.data(), k, n);
      ECMap av(an->value.data(), m, k);
      db.noalias() += av.transpose() * dc;
    }
  });
  EMap(out->value.data(), m, n).noalias() =
      ECMap(an->value.data(), m, k) * ECMap(bn->value.data(), k, n);
  return Tensor::wrap(out);
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "add shape mismatch");
  auto an = a.node(), bn = b.node();
  auto out = op_node(a.shape(), {an, bn}, [an, bn](Node& self) {
    for (auto* p : {an.get(), bn.get()}) {
      if (!p->needs_grad) continue;
      p->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    }
  });
  for (size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = an->value[i] + bn->value[i];
  return Tensor::wrap(out);
}

Tensor add_rowwise(const Tensor& a, const Tensor& bias) {
  require(a.shape().size() == 2, "add_rowwise needs a 2-d tensor");
  const int m = a.dim(0), n = a.dim(1);
  require(static_cast<int>(bias.numel()) == n, "bias length must match columns");
  auto an = a.node(), bn = bias.node();
  auto out = op_node({m, n}, {an, bn}, [an, bn, m, n](Node& self) {
    if (an->needs_grad) {
      an->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
    }
    if (bn->needs_grad) {
      bn->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) bn->grad[j] += self.grad[static_cast<size_t>(i) * n + j];
    }
  });
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out->value[static_cast<size_t>(i) * n + j] =
          an->value[static_cast<size_t>(i) * n + j] + bn->value[j];
  return Tensor::wrap(out);
}

Tensor dense(const Tensor& x, const Tensor& w, const Tensor& bias) {
  Tensor y = matmul(x, w);
  if (!bias.defined()) return y;
  return add_rowwise(y, bias);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "sub shape mismatch");
  auto an = a.node(), bn = b.node();
  auto out = op_node(a.shape(), {an, bn}, [an, bn](Node& self) {
    if (an->needs_grad) {
      an->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
    }
    if (bn->needs_grad) {
      bn->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] -= self.grad[i];
    }
  });
  for (size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = an->value[i] - bn->value[i];
  return Tensor::wrap(out);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "mul shape mismatch");
  auto an = a.node(), bn = b.node();
  auto out = op_node(a.shape(), {an, bn}, [an, bn](Node& self) {
    if (an->needs_grad) {
      an->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        an->grad[i] += self.grad[i] * bn->value[i];
    }
    if (bn->needs_grad) {
      bn->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        bn->grad[i] += self.grad[i] * an->value[i];
    }
  });
  for (size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = an->value[i] * bn->value[i];
  return Tensor::wrap(out);
}

Tensor scale(const Tensor& a, double c) {
  auto an = a.node();
  auto out = op_node(a.shape(), {an}, [an, c](Node& self) {
    an->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += c * self.grad[i];
  });
  for (size_t i = 0; i < out->value.size(); ++i) out->value[i] = c * an->value[i];
  return Tensor::wrap(out);
}

Tensor relu(const Tensor& x) {
  auto xn = x.node();
  auto out = op_node(x.shape(), {xn}, [xn](Node& self) {
    xn->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      if (xn->value[i] > 0.0) xn->grad[i] += self.grad[i];
  });
  for (size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = xn->value[i] > 0.0 ? xn->value[i] : 0.0;
  return Tensor::wrap(out);
}

Tensor leaky_relu(const Tensor& x, double slope) {
  auto xn = x.node();
  auto out = op_node(x.shape(), {xn}, [xn, slope](Node& self) {
    xn->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      xn->grad[i] += self.grad[i] * (xn->value[i] > 0.0 ? 1.0 : slope);
  });
  for (size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = xn->value[i] > 0.0 ? xn->value[i] : slope * xn->value[i];
  return Tensor::wrap(out);
}

Tensor sigmoid(const Tensor& x) {
  auto xn = x.node();
  auto out = op_node(x.shape(), {xn}, [xn](Node& self) {
    xn->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const double y = self.value[i];
      xn->grad[i] += self.grad[i] * y * (1.0 - y);
    }
  });
  for (size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = 1.0 / (1.0 + std::exp(-xn->value[i]));
  return Tensor::wrap(out);
}

Tensor softmax_segments(const Tensor& scores, const std::vector<int>& segment_ids,
                        int num_segments) {
  require(static_cast<size_t>(scores.numel()) == segment_ids.size(),
          "one segment id per score required");
  for (int s : segment_ids)
    require(s >= 0 && s < num_segments, "segment id out of range");
  auto sn = scores.node();
  const size_t e = segment_ids.size();
  auto ids = segment_ids;  // captured by value

  auto out = op_node(scores.shape(), {sn}, [sn, ids, num_segments](Node& self) {
    sn->ensure_grad();
    // dx_e = y_e * (dy_e - sum_{e' in seg} dy_e' * y_e')
    std::vector<double> seg_dot(static_cast<size_t>(num_segments), 0.0);
    for (size_t i = 0; i < ids.size(); ++i)
      seg_dot[static_cast<size_t>(ids[i])] += self.grad[i] * self.value[i];
    for (size_t i = 0; i < ids.size(); ++i)
      sn->grad[i] += self.value[i] * (self.grad[i] - seg_dot[static_cast<size_t>(ids[i])]);
  });

  std::vector<double> seg_max(static_cast<size_t>(num_segments),
                              -std::numeric_limits<double>::infinity());
  for (size_t i = 0; i < e; ++i)
    seg_max[static_cast<size_t>(ids[i])] =
        std::max(seg_max[static_cast<size_t>(ids[i])], sn->value[i]);
  std::vector<double> seg_sum(static_cast<size_t>(num_segments), 0.0);
  for (size_t i = 0; i < e; ++i) {
    out->value[i] = std::exp(sn->value[i] - seg_max[static_cast<size_t>(ids[i])]);
    seg_sum[static_cast<size_t>(ids[i])] += out->value[i];
  }
  for (size_t i = 0; i < e; ++i) out->value[i] /= seg_sum[static_cast<size_t>(ids[i])];
  return Tensor::wrap(out);
}

Tensor segment_aggregate(const Tensor& messages, const std::vector<int>& segment_ids,
                         int num_segments, Reduce mode) {
  require(messages.shape().size() == 2, "segment_aggregate needs 2-d messages");
  const int e = messages.dim(0), d = messages.dim(1);
  require(static_cast<size_t>(e) == segment_ids.size(), "one segment id per message row");
  for (int s : segment_ids)
    require(s >= 0 && s < num_segments, "segment id out of range");

  std::vector<double> inv_count(static_cast<size_t>(num_segments), 0.0);
  if (mode == Reduce::kMean) {
    for (int s : segment_ids) inv_count[static_cast<size_t>(s)] += 1.0;
    for (auto& c : inv_count) c = c > 0.0 ? 1.0 / c : 0.0;
  } else {
    std::fill(inv_count.begin(), inv_count.end(), 1.0);
  }

  auto mn = messages.node();
  auto ids = segment_ids;
  auto out = op_node({num_segments, d}, {mn}, [mn, ids, d, inv_count](Node& self) {
    mn->ensure_grad();
    for (size_t i = 0; i < ids.size(); ++i) {
      const double w = inv_count[static_cast<size_t>(ids[i])];
      const size_t src = static_cast<size_t>(ids[i]) * d;
      for (int j = 0; j < d; ++j) mn->grad[i * d + j] += w * self.grad[src + j];
    }
  });
  for (size_t i = 0; i < ids.size(); ++i) {
    const double w = inv_count[static_cast<size_t>(ids[i])];
    const size_t dst = static_cast<size_t>(ids[i]) * d;
    for (int j = 0; j < d; ++j) out->value[dst + j] += w * mn->value[i * d + j];
  }
  return Tensor::wrap(out);
}

Tensor gather_rows(const Tensor& x, const std::vector<int>& row_ids) {
  require(x.shape().size() == 2, "gather_rows needs a 2-d tensor");
  const int n = x.dim(0), d = x.dim(1);
  for (int r : row_ids) require(r >= 0 && r < n, "row id out of range");
  auto xn = x.node();
  auto ids = row_ids;
  auto out = op_node({static_cast<int>(row_ids.size()), d}, {xn}, [xn, ids, d](Node& self) {
    xn->ensure_grad();
    for (size_t i = 0; i < ids.size(); ++i) {
      const size_t dst = static_cast<size_t>(ids[i]) * d;
      for (int j = 0; j < d; ++j) xn->grad[dst + j] += self.grad[i * d + j];
    }
  });
  for (size_t i = 0; i < ids.size(); ++i) {
    const size_t src = static_cast<size_t>(ids[i]) * d;
    for (int j = 0; j < d; ++j) out->value[i * d + j] = xn->value[src + j];
  }
  return Tensor::wrap(out);
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat_cols needs at least one part");
  const int m = parts[0].dim(0);
  int total = 0;
  std::vector<std::shared_ptr<Node>> nodes;
  for (const auto& p : parts) {
    require(p.shape().size() == 2 && p.dim(0) == m, "concat_cols row mismatch");
    total += p.dim(1);
    nodes.push_back(p.node());
  }
  auto out = op_node({m, total}, nodes, [nodes, m, total](Node& self) {
    int off = 0;
    for (const auto& p : nodes) {
      const int d = p->shape[1];
      if (p->needs_grad) {
        p->ensure_grad();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < d; ++j)
            p->grad[static_cast<size_t>(i) * d + j] +=
                self.grad[static_cast<size_t>(i) * total + off + j];
      }
      off += d;
    }
  });
  int off = 0;
  for (const auto& p : nodes) {
    const int d = p->shape[1];
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < d; ++j)
        out->value[static_cast<size_t>(i) * total + off + j] =
            p->value[static_cast<size_t>(i) * d + j];
    off += d;
  }
  return Tensor::wrap(out);
}

Tensor scale_rows(const Tensor& x, const Tensor& per_row) {
  require(x.shape().size() == 2, "scale_rows needs a 2-d tensor");
  const int m = x.dim(0), d = x.dim(1);
  require(static_cast<int>(per_row.numel()) == m, "one scale per row required");
  auto xn = x.node(), sn = per_row.node();
  auto out = op_node({m, d}, {xn, sn}, [xn, sn, m, d](Node& self) {
    if (xn->needs_grad) {
      xn->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < d; ++j)
          xn->grad[static_cast<size_t>(i) * d + j] +=
              self.grad[static_cast<size_t>(i) * d + j] * sn->value[i];
    }
    if (sn->needs_grad) {
      sn->ensure_grad();
      for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j)
          acc += self.grad[static_cast<size_t>(i) * d + j] *
                 xn->value[static_cast<size_t>(i) * d + j];
        sn->grad[i] += acc;
      }
    }
  });
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j)
      out->value[static_cast<size_t>(i) * d + j] =
          xn->value[static_cast<size_t>(i) * d + j] * sn->value[i];
  return Tensor::wrap(out);
}

Tensor sum(const Tensor& x) {
  auto xn = x.node();
  auto out = op_node({1}, {xn}, [xn](Node& self) {
    xn->ensure_grad();
    for (auto& g : xn->grad) g += self.grad[0];
  });
  double acc = 0.0;
  for (double v : xn->value) acc += v;
  out->value[0] = acc;
  return Tensor::wrap(out);
}

Tensor mean(const Tensor& x) {
  require(x.numel() > 0, "mean of empty tensor");
  auto xn = x.node();
  const double inv = 1.0 / static_cast<double>(x.numel());
  auto out = op_node({1}, {xn}, [xn, inv](Node& self) {
    xn->ensure_grad();
    for (auto& g : xn->grad) g += self.grad[0] * inv;
  });
  double acc = 0.0;
  for (double v : xn->value) acc += v;
  out->value[0] = acc * inv;
  return Tensor::wrap(out);
}

NoGradGuard::NoGradGuard() { ++no_grad_depth; }
NoGradGuard::~NoGradGuard() { --no_grad_depth; }
bool grad_enabled() { return no_grad_depth == 0; }

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw ContractViolation("backward requires a scalar loss");
  auto root = loss.node();
  if (!root->needs_grad) return;  // loss does not depend on any parameter

  // iterative post-order DFS
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx++].get();
      if (p->needs_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop) {
      n->ensure_grad();
      n->backprop(*n);
    }
  }
}

// ---- parameters ------------------------------------------------------------

Tensor& ParameterSet::create(const std::string& name, std::vector<int> shape,
                             int fan_in, Rng& rng) {
  require(!contains(name), "duplicate parameter name");
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1)));
  std::vector<double> v(check_numel(shape));
  for (auto& x : v) x = rng.uniform(-bound, bound);
  auto [it, _] = params_.emplace(name, Tensor::from_values(std::move(shape), std::move(v), true));
  order_.push_back(name);
  return it->second;
}

Tensor& ParameterSet::create_zeros(const std::string& name, std::vector<int> shape) {
  require(!contains(name), "duplicate parameter name");
  auto [it, _] = params_.emplace(name, Tensor::zeros(std::move(shape), true));
  order_.push_back(name);
  return it->second;
}

Tensor& ParameterSet::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractViolation("unknown parameter: " + name);
  return it->second;
}

const Tensor& ParameterSet::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractViolation("unknown parameter: " + name);
  return it->second;
}

bool ParameterSet::contains(const std::string& name) const {
  return params_.count(name) > 0;
}

size_t ParameterSet::total_parameters() const {
  size_t n = 0;
  for (const auto& [_, t] : params_) n += t.numel();
  return n;
}

void ParameterSet::zero_grads() {
  for (auto& [_, t] : params_) t.zero_grad();
}

ParameterSet ParameterSet::clone() const {
  ParameterSet copy;
  copy.init_seed = init_seed;
  copy.init_scheme = init_scheme;
  copy.step_count = step_count;
  for (const auto& name : order_) {
    const Tensor& src = params_.at(name);
    copy.params_.emplace(name, Tensor::from_values(src.shape(), src.values(), true));
    copy.order_.push_back(name);
  }
  return copy;
}

void ParameterSet::copy_values_from(const ParameterSet& other) {
  for (const auto& name : order_) {
    Tensor& dst = get(name);
    const Tensor& src = other.get(name);
    require(dst.shape() == src.shape(), "copy_values_from shape mismatch");
    dst.values() = src.values();
  }
}

void soft_update(const ParameterSet& online, ParameterSet& target, double tau) {
  for (const auto& name : target.names()) {
    Tensor& t = target.get(name);
    const Tensor& o = online.get(name);
    if (t.shape() != o.shape()) throw ContractViolation("soft_update shape mismatch");
    auto& tv = t.values();
    const auto& ov = o.values();
    for (size_t i = 0; i < tv.size(); ++i) tv[i] = tau * ov[i] + (1.0 - tau) * tv[i];
  }
}

void Adam::step(ParameterSet& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (const auto& name : params.names()) {
    Tensor& p = params.get(name);
    auto& g = p.grad();
    auto& m = m_[name];
    auto& v = v_[name];
    if (m.size() != g.size()) m.assign(g.size(), 0.0);
    if (v.size() != g.size()) v.assign(g.size(), 0.0);
    auto& val = p.values();
    for (size_t i = 0; i < g.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mh = m[i] / bc1;
      const double vh = v[i] / bc2;
      val[i] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
    }
  }
  params.zero_grads();
  params.step_count += 1;
}

}  // namespace coord::diff
