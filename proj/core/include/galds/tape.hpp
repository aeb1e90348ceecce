#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "galds/tensor.hpp"

namespace galds {

// Symmetric sparse matrix in CSR form, used for normalized graph adjacencies.
struct CsrMatrix {
  int32_t n = 0;
  std::vector<int32_t> row_ptr;  // n + 1
  std::vector<int32_t> col_idx;
  std::vector<double> vals;
};

// Reverse-mode tape over dense 2-D float64 buffers. The tape is define-by-run:
// it is rebuilt on every forward pass and backward() visits each node exactly
// once in reverse creation order. Values and grads live in two flat arenas so
// reset() reuses capacity across passes.
class Tape {
 public:
  struct Var {
    int32_t id = -1;
    int32_t rows = 0;
    int32_t cols = 0;
    bool valid() const { return id >= 0; }
  };

  // When set, every op scans its output for non-finite values and aborts.
  bool check_finite = false;

  void reset();
  size_t node_count() const { return nodes_.size(); }

  // Leaf referencing an external parameter or input; values are copied in and
  // gradients are accumulated back into t.grad() by backward().
  Var leaf(Tensor& t);
  Var constant(int32_t rows, int32_t cols, std::span<const double> v);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);                     // elementwise
  Var add_scaled(Var a, Var b, double s);    // a + s * b
  Var scale(Var a, double s);
  Var add_rowvec(Var a, Var bias);           // bias is 1 x cols
  Var relu(Var a);
  Var softplus(Var a);
  Var sigmoid(Var a);

  // Block-diagonal application of one P x P matrix to each consecutive block
  // of P rows (shared cross-section adjacency over a batch of sections).
  Var dense_block_mix(Var x, const std::vector<double>& a, int32_t p);
  // Same with a distinct P x P matrix per block; mats has rows/p entries and,
  // like every ext payload, must outlive backward().
  Var dense_block_mix_multi(Var x, const std::vector<const std::vector<double>*>& mats,
                            int32_t p);
  // Same with a CSR matrix of size A.n applied per block of A.n rows.
  Var sparse_block_mix(Var x, const CsrMatrix& a);

  Var mean_rows_blocks(Var x, int32_t p);    // (N*P) x F -> N x F
  Var repeat_rows_blocks(Var x, int32_t p);  // N x F -> (N*P) x F
  Var concat_cols(std::span<const Var> parts);
  Var concat_rows(std::span<const Var> parts);
  Var row_gather(Var x, const std::vector<int32_t>& idx);

  Var sum(Var a);          // 1 x 1
  Var sse(Var a, Var b);   // sum of squared differences, 1 x 1

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape once. `loss` must be 1 x 1.
  void backward(Var loss);

  std::span<const double> value(Var v) const;
  double scalar(Var v) const;

 private:
  enum class Op : uint8_t {
    leaf, constant, matmul, mul, add_scaled, scale, add_rowvec,
    relu, softplus, sigmoid, dense_block_mix, dense_block_mix_multi,
    sparse_block_mix, mean_rows_blocks, repeat_rows_blocks, concat_cols,
    concat_rows, row_gather, sum, sse,
  };

  struct Node {
    Op op;
    int32_t rows, cols;
    size_t off;                 // arena offset, rows*cols doubles
    int32_t p0 = -1, p1 = -1;
    double a = 0.0;             // scalar payload
    int32_t i0 = 0;             // block size payload
    const void* ext = nullptr;  // caller-owned matrix / index payload
    Tensor* leaf_tensor = nullptr;
    std::vector<int32_t> extra;  // concat parents
  };

  Var push(Op op, int32_t rows, int32_t cols, int32_t p0, int32_t p1);
  double* val(int32_t id) { return vals_.data() + nodes_[static_cast<size_t>(id)].off; }
  const double* val(int32_t id) const { return vals_.data() + nodes_[static_cast<size_t>(id)].off; }
  double* grd(int32_t id) { return grads_.data() + nodes_[static_cast<size_t>(id)].off; }
  void verify_finite(const Node& n) const;
  void backward_node(int32_t id);

  std::vector<Node> nodes_;
  std::vector<double> vals_;
  std::vector<double> grads_;
  size_t used_ = 0;
};

}  // namespace galds
