#include "galds/nn_layers.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "galds/error.hpp"

namespace galds {

Activation activation_from_name(const std::string& name) {
  if (name == "linear") return Activation::linear;
  if (name == "relu") return Activation::relu;
  if (name == "softplus") return Activation::softplus;
  if (name == "sigmoid") return Activation::sigmoid;
  fail(ErrorCode::usage, "unknown activation '" + name + "'");
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::softplus: return "softplus";
    case Activation::sigmoid: return "sigmoid";
  }
  return "linear";
}

Tape::Var apply_activation(Tape& tape, Tape::Var x, Activation act) {
  switch (act) {
    case Activation::linear: return x;
    case Activation::relu: return tape.relu(x);
    case Activation::softplus: return tape.softplus(x);
    case Activation::sigmoid: return tape.sigmoid(x);
  }
  return x;
}

namespace {

std::vector<double> node_degrees(int32_t n, const EdgeList& edges) {
  if (n <= 0) fail(ErrorCode::validation, "adjacency over zero nodes");
  std::set<std::pair<int32_t, int32_t>> seen;
  std::vector<double> deg(static_cast<size_t>(n), 1.0);  // self loop
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n)
      fail(ErrorCode::validation, "adjacency edge endpoint out of range");
    if (u == v) fail(ErrorCode::validation, "explicit self-loop in adjacency edge list");
    auto key = std::minmax(u, v);
    if (!seen.insert(key).second)
      fail(ErrorCode::validation, "duplicate edge in adjacency edge list");
    deg[static_cast<size_t>(u)] += 1.0;
    deg[static_cast<size_t>(v)] += 1.0;
  }
  return deg;
}

}  // namespace

std::vector<double> dense_normalized_adjacency(int32_t n, const EdgeList& edges) {
  std::vector<double> deg = node_degrees(n, edges);
  std::vector<double> inv_sqrt(deg.size());
  for (size_t i = 0; i < deg.size(); ++i) inv_sqrt[i] = 1.0 / std::sqrt(deg[i]);
  std::vector<double> a(static_cast<size_t>(n) * n, 0.0);
  for (int32_t i = 0; i < n; ++i)
    a[static_cast<size_t>(i) * n + i] = inv_sqrt[static_cast<size_t>(i)] * inv_sqrt[static_cast<size_t>(i)];
  for (auto [u, v] : edges) {
    double w = inv_sqrt[static_cast<size_t>(u)] * inv_sqrt[static_cast<size_t>(v)];
    a[static_cast<size_t>(u) * n + v] = w;
    a[static_cast<size_t>(v) * n + u] = w;
  }
  return a;
}

CsrMatrix csr_normalized_adjacency(int32_t n, const EdgeList& edges) {
  std::vector<double> deg = node_degrees(n, edges);
  std::vector<double> inv_sqrt(deg.size());
  for (size_t i = 0; i < deg.size(); ++i) inv_sqrt[i] = 1.0 / std::sqrt(deg[i]);
  std::vector<std::vector<std::pair<int32_t, double>>> rows(static_cast<size_t>(n));
  for (int32_t i = 0; i < n; ++i)
    rows[static_cast<size_t>(i)].push_back({i, inv_sqrt[static_cast<size_t>(i)] * inv_sqrt[static_cast<size_t>(i)]});
  for (auto [u, v] : edges) {
    double w = inv_sqrt[static_cast<size_t>(u)] * inv_sqrt[static_cast<size_t>(v)];
    rows[static_cast<size_t>(u)].push_back({v, w});
    rows[static_cast<size_t>(v)].push_back({u, w});
  }
  CsrMatrix m;
  m.n = n;
  m.row_ptr.resize(static_cast<size_t>(n) + 1, 0);
  for (int32_t i = 0; i < n; ++i) {
    auto& r = rows[static_cast<size_t>(i)];
    std::sort(r.begin(), r.end());
    m.row_ptr[static_cast<size_t>(i) + 1] = m.row_ptr[static_cast<size_t>(i)] + static_cast<int32_t>(r.size());
    for (auto& [j, w] : r) {
      m.col_idx.push_back(j);
      m.vals.push_back(w);
    }
  }
  return m;
}

Tensor glorot_uniform(int64_t fan_in, int64_t fan_out, Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t({fan_in, fan_out}, true);
  for (auto& v : t.values()) v = rng.uniform(-limit, limit);
  return t;
}

GconvLayer::GconvLayer(int64_t f_in, int64_t f_out, Activation act_, Rng& rng)
    : w(glorot_uniform(f_in, f_out, rng)), b(Tensor({1, f_out}, true)), act(act_) {}

Tape::Var GconvLayer::forward_dense(Tape& tape, Tape::Var h,
                                    const std::vector<double>& a_hat, int32_t p) {
  Tape::Var hw = tape.matmul(h, tape.leaf(w));
  Tape::Var mixed = tape.dense_block_mix(hw, a_hat, p);
  return apply_activation(tape, tape.add_rowvec(mixed, tape.leaf(b)), act);
}

Tape::Var GconvLayer::forward_multi(Tape& tape, Tape::Var h,
                                    const std::vector<const std::vector<double>*>& a_hats,
                                    int32_t p) {
  Tape::Var hw = tape.matmul(h, tape.leaf(w));
  Tape::Var mixed = tape.dense_block_mix_multi(hw, a_hats, p);
  return apply_activation(tape, tape.add_rowvec(mixed, tape.leaf(b)), act);
}

Tape::Var GconvLayer::forward_sparse(Tape& tape, Tape::Var h, const CsrMatrix& a_hat) {
  Tape::Var hw = tape.matmul(h, tape.leaf(w));
  Tape::Var mixed = tape.sparse_block_mix(hw, a_hat);
  return apply_activation(tape, tape.add_rowvec(mixed, tape.leaf(b)), act);
}

DenseLayer::DenseLayer(int64_t f_in, int64_t f_out, Activation act_, Rng& rng)
    : w(glorot_uniform(f_in, f_out, rng)), b(Tensor({1, f_out}, true)), act(act_) {}

Tape::Var DenseLayer::forward(Tape& tape, Tape::Var x) {
  Tape::Var xw = tape.matmul(x, tape.leaf(w));
  return apply_activation(tape, tape.add_rowvec(xw, tape.leaf(b)), act);
}

void ParamRegistry::add(const std::string& name, Tensor* t) {
  for (auto& [existing, _] : items_)
    if (existing == name) fail(ErrorCode::validation, "duplicate parameter name " + name);
  if (!t->requires_grad()) t->set_requires_grad(true);
  items_.push_back({name, t});
}

void ParamRegistry::add_layer(const std::string& prefix, GconvLayer& layer) {
  add(prefix + ".W", &layer.w);
  add(prefix + ".b", &layer.b);
}

void ParamRegistry::add_layer(const std::string& prefix, DenseLayer& layer) {
  add(prefix + ".W", &layer.w);
  add(prefix + ".b", &layer.b);
}

void ParamRegistry::merge(const ParamRegistry& other) {
  for (auto& [name, t] : other.items_) add(name, t);
}

std::vector<Tensor*> ParamRegistry::tensors() const {
  std::vector<Tensor*> out;
  out.reserve(items_.size());
  for (auto& [_, t] : items_) out.push_back(t);
  return out;
}

void ParamRegistry::zero_grad() {
  for (auto& [_, t] : items_) t->zero_grad();
}

int64_t ParamRegistry::parameter_count() const {
  int64_t n = 0;
  for (auto& [_, t] : items_) n += t->size();
  return n;
}

}  // namespace galds
