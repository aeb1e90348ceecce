#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "galds/rng.hpp"
#include "galds/tape.hpp"
#include "galds/tensor.hpp"

namespace galds {

enum class Activation { linear, relu, softplus, sigmoid };

Activation activation_from_name(const std::string& name);
std::string activation_name(Activation a);
Tape::Var apply_activation(Tape& tape, Tape::Var x, Activation act);

// Undirected edge list; nodes are 0-based.
using EdgeList = std::vector<std::pair<int32_t, int32_t>>;

// Kipf-style symmetric normalization A_hat = D^-1/2 (A + I) D^-1/2.
// Rejects self-loops, duplicate edges, and out-of-range endpoints.
std::vector<double> dense_normalized_adjacency(int32_t n, const EdgeList& edges);
CsrMatrix csr_normalized_adjacency(int32_t n, const EdgeList& edges);

// Glorot-uniform initialized weight of shape {fan_in, fan_out}.
Tensor glorot_uniform(int64_t fan_in, int64_t fan_out, Rng& rng);

// One graph-convolution layer: act(A_hat * H * W + b). The adjacency is
// supplied per call (dense per-template or CSR per-geometry block batches).
struct GconvLayer {
  Tensor w;  // {f_in, f_out}
  Tensor b;  // {1, f_out}
  Activation act = Activation::relu;

  GconvLayer() = default;
  GconvLayer(int64_t f_in, int64_t f_out, Activation act, Rng& rng);
  Tape::Var forward_dense(Tape& tape, Tape::Var h, const std::vector<double>& a_hat,
                          int32_t p);
  Tape::Var forward_multi(Tape& tape, Tape::Var h,
                          const std::vector<const std::vector<double>*>& a_hats, int32_t p);
  Tape::Var forward_sparse(Tape& tape, Tape::Var h, const CsrMatrix& a_hat);
};

// Fully connected layer applied row-wise: act(X * W + b).
struct DenseLayer {
  Tensor w;
  Tensor b;
  Activation act = Activation::linear;

  DenseLayer() = default;
  DenseLayer(int64_t f_in, int64_t f_out, Activation act, Rng& rng);
  Tape::Var forward(Tape& tape, Tape::Var x);
};

// Named parameter registry used by the optimizer and checkpoint writer.
// Pointers refer to tensors owned by the registering model and stay valid for
// the registry's lifetime.
class ParamRegistry {
 public:
  void add(const std::string& name, Tensor* t);
  void add_layer(const std::string& prefix, GconvLayer& layer);
  void add_layer(const std::string& prefix, DenseLayer& layer);
  void merge(const ParamRegistry& other);

  const std::vector<std::pair<std::string, Tensor*>>& items() const { return items_; }
  std::vector<Tensor*> tensors() const;
  void zero_grad();
  int64_t parameter_count() const;

 private:
  std::vector<std::pair<std::string, Tensor*>> items_;
};

}  // namespace galds
