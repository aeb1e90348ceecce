#include "galds/tape.hpp"

#include <cmath>
#include <cstring>

#include "galds/error.hpp"

namespace galds {

namespace {

// C (m x n) += A (m x k) * B (k x n), row major. The ikj order keeps the
// inner loop contiguous in both B and C so it vectorizes.
void matmul_acc(const double* a, const double* b, double* c, int32_t m,
                int32_t k, int32_t n) {
  for (int32_t i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* crow = c + static_cast<size_t>(i) * n;
    for (int32_t kk = 0; kk < k; ++kk) {
      double av = arow[kk];
      if (av == 0.0) continue;
      const double* brow = b + static_cast<size_t>(kk) * n;
      for (int32_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C (m x k) += G (m x n) * B^T, i.e. C[i,kk] += dot(G[i,:], B[kk,:]).
void matmul_acc_bt(const double* g, const double* b, double* c, int32_t m,
                   int32_t k, int32_t n) {
  for (int32_t i = 0; i < m; ++i) {
    const double* grow = g + static_cast<size_t>(i) * n;
    double* crow = c + static_cast<size_t>(i) * k;
    for (int32_t kk = 0; kk < k; ++kk) {
      const double* brow = b + static_cast<size_t>(kk) * n;
      double acc = 0.0;
      for (int32_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
      crow[kk] += acc;
    }
  }
}

double softplus_val(double x) {
  // Numerically stable log(1 + exp(x)).
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double sigmoid_val(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void Tape::reset() {
  nodes_.clear();
  used_ = 0;
}

Tape::Var Tape::push(Op op, int32_t rows, int32_t cols, int32_t p0, int32_t p1) {
  if (rows <= 0 || cols <= 0)
    fail(ErrorCode::validation, "tape op with non-positive shape");
  Node n;
  n.op = op;
  n.rows = rows;
  n.cols = cols;
  n.off = used_;
  n.p0 = p0;
  n.p1 = p1;
  used_ += static_cast<size_t>(rows) * cols;
  if (vals_.size() < used_) vals_.resize(used_);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int32_t>(nodes_.size()) - 1, rows, cols};
}

void Tape::verify_finite(const Node& n) const {
  if (!check_finite) return;
  const double* v = vals_.data() + n.off;
  size_t count = static_cast<size_t>(n.rows) * n.cols;
  for (size_t i = 0; i < count; ++i)
    if (!std::isfinite(v[i]))
      fail(ErrorCode::numeric, "non-finite value produced by tape op");
}

Tape::Var Tape::leaf(Tensor& t) {
  int32_t rows, cols;
  if (t.rank() == 2) {
    rows = static_cast<int32_t>(t.dim(0));
    cols = static_cast<int32_t>(t.dim(1));
  } else if (t.rank() == 1) {
    rows = 1;
    cols = static_cast<int32_t>(t.dim(0));
  } else {
    fail(ErrorCode::validation, "tape leaves must be rank 1 or 2, got " + t.shape_str());
  }
  Var v = push(Op::leaf, rows, cols, -1, -1);
  std::memcpy(val(v.id), t.values().data(), sizeof(double) * t.values().size());
  nodes_.back().leaf_tensor = t.requires_grad() ? &t : nullptr;
  verify_finite(nodes_.back());
  return v;
}

Tape::Var Tape::constant(int32_t rows, int32_t cols, std::span<const double> data) {
  if (static_cast<size_t>(rows) * cols != data.size())
    fail(ErrorCode::validation, "tape constant size mismatch");
  Var v = push(Op::constant, rows, cols, -1, -1);
  std::memcpy(val(v.id), data.data(), sizeof(double) * data.size());
  verify_finite(nodes_.back());
  return v;
}

Tape::Var Tape::matmul(Var a, Var b) {
  if (a.cols != b.rows) fail(ErrorCode::validation, "matmul inner dims differ");
  Var v = push(Op::matmul, a.rows, b.cols, a.id, b.id);
  double* out = val(v.id);
  std::memset(out, 0, sizeof(double) * static_cast<size_t>(v.rows) * v.cols);
  matmul_acc(val(a.id), val(b.id), out, a.rows, a.cols, b.cols);
  verify_finite(nodes_.back());
  return v;
}

Tape::Var Tape::add(Var a, Var b) { return add_scaled(a, b, 1.0); }
Tape::Var Tape::sub(Var a, Var b) { return add_scaled(a, b, -1.0); }

Tape::Var Tape::add_scaled(Var a, Var b, double s) {
  if (a.rows != b.rows || a.cols != b.cols)
    fail(ErrorCode::validation, "elementwise op shape mismatch");
  Var v = push(Op::add_scaled, a.rows, a.cols, a.id, b.id);
  nodes_.back().a = s;
  const double* pa = val(a.id);
  const double* pb = val(b.id);
  double* out = val(v.id);
  size_t count = static_cast<size_t>(v.rows) * v.cols;
  for (size_t i = 0; i < count; ++i) out[i] = pa[i] + s * pb[i];
  verify_finite(nodes_.back());
  return v;
}

Tape::Var Tape::mul(Var a, Var b) {
  if (a.rows != b.rows || a.cols != b.cols)
    fail(ErrorCode::validation, "elementwise op shape mismatch");
  Var v = push(Op::mul, a.rows, a.cols, a.id, b.id);
  const double* pa = val(a.id);
  const double* pb = val(b.id);
  double* out = val(v.id);
  size_t count = static_cast<size_t>(v.rows) * v.cols;
  for (size_t i = 0; i < count; ++i) out[i] = pa[i] * pb[i];
  verify_finite(nodes_.back());
  return v;
}

Tape::Var Tape::scale(Var a, double s) {
  Var v = push(Op::scale, a.rows, a.cols, a.id, -1);
  nodes_.back().a = s;
  const double* pa = val(a.id);
  double* out = val(v.id);
  size_t count = static_cast<size_t>(v.rows) * v.cols;
  for (size_t i = 0; i < count; ++i) out[i] = s * pa[i];
  verify_finite(nodes_.back());
  return v;
}

Tape::Var Tape::add_rowvec(Var a, Var bias) {
  if (bias.rows != 1 || bias.cols != a.cols)
    fail(ErrorCode::validation, "row bias must be 1 x cols");
  Var v = push(Op::add_rowvec, a.rows, a.cols, a.id, bias.id);
  const double* pa = val(a.id);
  const double* pb = val(bias.id);
  double* out = val(v.id);
  for (int32_t i = 0; i < a.rows; ++i) {
    const double* arow = pa + static_cast<size_t>(i) * a.cols;
    double* orow = out + static_cast<size_t>(i) * a.cols;
    for (int32_t j = 0; j < a.cols; ++j) orow[j] = arow[j] + pb[j];
  }
  verify_finite(nodes_.back());
  return v;
}

Tape::Var Tape::relu(Var a) {
  Var v = push(Op::relu, a.rows, a.cols, a.id, -1);
  const double* pa = val(a.id);
  double* out = val(v.id);
  size_t count = static_cast<size_t>(v.rows) * v.cols;
  for (size_t i = 0; i < count; ++i) out[i] = pa[i] > 0.0 ? pa[i] : 0.0;
  verify_finite(nodes_.back());
  return v;
}

Tape::Var Tape::softplus(Var a) {
  Var v = push(Op::softplus, a.rows, a.cols, a.id, -1);
  const double* pa = val(a.id);
  double* out = val(v.id);
  size_t count = static_cast<size_t>(v.rows) * v.cols;
  for (size_t i = 0; i < count; ++i) out[i] = softplus_val(pa[i]);
  verify_finite(nodes_.back());
  return v;
}

Tape::Var Tape::sigmoid(Var a) {
  Var v = push(Op::sigmoid, a.rows, a.cols, a.id, -1);
  const double* pa = val(a.id);
  double* out = val(v.id);
  size_t count = static_cast<size_t>(v.rows) * v.cols;
  for (size_t i = 0; i < count; ++i) out[i] = sigmoid_val(pa[i]);
  verify_finite(nodes_.back());
  return v;
}

Tape::Var Tape::dense_block_mix(Var x, const std::vector<double>& a, int32_t p) {
  if (p <= 0 || x.rows % p != 0)
    fail(ErrorCode::validation, "block mix rows not a multiple of block size");
  if (static_cast<size_t>(p) * p != a.size())
    fail(ErrorCode::validation, "block mix matrix size mismatch");
  Var v = push(Op::dense_block_mix, x.rows, x.cols, x.id, -1);
  nodes_.back().i0 = p;
  nodes_.back().ext = &a;
  const int32_t f = x.cols;
  const double* px = val(x.id);
  double* out = val(v.id);
  std::memset(out, 0, sizeof(double) * static_cast<size_t>(x.rows) * f);
  for (int32_t b = 0; b < x.rows / p; ++b) {
    matmul_acc(a.data(), px + static_cast<size_t>(b) * p * f,
               out + static_cast<size_t>(b) * p * f, p, p, f);
  }
  verify_finite(nodes_.back());
  return v;
}

Tape::Var Tape::dense_block_mix_multi(Var x, const std::vector<const std::vector<double>*>& mats,
                                      int32_t p) {
  if (p <= 0 || x.rows % p != 0)
    fail(ErrorCode::validation, "block mix rows not a multiple of block size");
  if (static_cast<int32_t>(mats.size()) != x.rows / p)
    fail(ErrorCode::validation, "block mix matrix count mismatch");
  for (const auto* m : mats)
    if (m == nullptr || static_cast<size_t>(p) * p != m->size())
      fail(ErrorCode::validation, "block mix matrix size mismatch");
  Var v = push(Op::dense_block_mix_multi, x.rows, x.cols, x.id, -1);
  nodes_.back().i0 = p;
  nodes_.back().ext = &mats;
  const int32_t f = x.cols;
  const double* px = val(x.id);
  double* out = val(v.id);
  std::memset(out, 0, sizeof(double) * static_cast<size_t>(x.rows) * f);
  for (int32_t b = 0; b < x.rows / p; ++b) {
    matmul_acc(mats[static_cast<size_t>(b)]->data(), px + static_cast<size_t>(b) * p * f,
               out + static_cast<size_t>(b) * p * f, p, p, f);
  }
  verify_finite(nodes_.back());
  return v;
}

Tape::Var Tape::sparse_block_mix(Var x, const CsrMatrix& a) {
  if (a.n <= 0 || x.rows % a.n != 0)
    fail(ErrorCode::validation, "sparse block mix rows not a multiple of matrix size");
  Var v = push(Op::sparse_block_mix, x.rows, x.cols, x.id, -1);
  nodes_.back().i0 = a.n;
  nodes_.back().ext = &a;
  const int32_t f = x.cols;
  const double* px = val(x.id);
  double* out = val(v.id);
  std::memset(out, 0, sizeof(double) * static_cast<size_t>(x.rows) * f);
  for (int32_t b = 0; b < x.rows / a.n; ++b) {
    const double* xb = px + static_cast<size_t>(b) * a.n * f;
    double* ob = out + static_cast<size_t>(b) * a.n * f;
    for (int32_t i = 0; i < a.n; ++i) {
      double* orow = ob + static_cast<size_t>(i) * f;
      for (int32_t e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e) {
        double w = a.vals[static_cast<size_t>(e)];
        const double* xrow = xb + static_cast<size_t>(a.col_idx[static_cast<size_t>(e)]) * f;
        for (int32_t j = 0; j < f; ++j) orow[j] += w * xrow[j];
      }
    }
  }
  verify_finite(nodes_.back());
  return v;
}

Tape::Var Tape::mean_rows_blocks(Var x, int32_t p) {
  if (p <= 0 || x.rows % p != 0)
    fail(ErrorCode::validation, "mean pool rows not a multiple of block size");
  Var v = push(Op::mean_rows_blocks, x.rows / p, x.cols, x.id, -1);
  nodes_.back().i0 = p;
  const int32_t f = x.cols;
  const double* px = val(x.id);
  double* out = val(v.id);
  const double inv = 1.0 / p;
  for (int32_t b = 0; b < v.rows; ++b) {
    double* orow = out + static_cast<size_t>(b) * f;
    for (int32_t j = 0; j < f; ++j) orow[j] = 0.0;
    for (int32_t i = 0; i < p; ++i) {
      const double* xrow = px + (static_cast<size_t>(b) * p + i) * f;
      for (int32_t j = 0; j < f; ++j) orow[j] += xrow[j];
    }
    for (int32_t j = 0; j < f; ++j) orow[j] *= inv;
  }
  verify_finite(nodes_.back());
  return v;
}

Tape::Var Tape::repeat_rows_blocks(Var x, int32_t p) {
  if (p <= 0) fail(ErrorCode::validation, "repeat block size must be positive");
  Var v = push(Op::repeat_rows_blocks, x.rows * p, x.cols, x.id, -1);
  nodes_.back().i0 = p;
  const int32_t f = x.cols;
  const double* px = val(x.id);
  double* out = val(v.id);
  for (int32_t b = 0; b < x.rows; ++b) {
    const double* xrow = px + static_cast<size_t>(b) * f;
    for (int32_t i = 0; i < p; ++i) {
      std::memcpy(out + (static_cast<size_t>(b) * p + i) * f, xrow, sizeof(double) * f);
    }
  }
  verify_finite(nodes_.back());
  return v;
}

Tape::Var Tape::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) fail(ErrorCode::validation, "concat of zero parts");
  int32_t rows = parts[0].rows;
  int32_t cols = 0;
  for (const Var& part : parts) {
    if (part.rows != rows) fail(ErrorCode::validation, "concat row mismatch");
    cols += part.cols;
  }
  Var v = push(Op::concat_cols, rows, cols, -1, -1);
  for (const Var& part : parts) nodes_.back().extra.push_back(part.id);
  double* out = val(v.id);
  for (int32_t i = 0; i < rows; ++i) {
    double* orow = out + static_cast<size_t>(i) * cols;
    int32_t at = 0;
    for (const Var& part : parts) {
      const double* prow = val(part.id) + static_cast<size_t>(i) * part.cols;
      std::memcpy(orow + at, prow, sizeof(double) * part.cols);
      at += part.cols;
    }
  }
  verify_finite(nodes_.back());
  return v;
}

Tape::Var Tape::concat_rows(std::span<const Var> parts) {
  if (parts.empty()) fail(ErrorCode::validation, "concat of zero parts");
  int32_t cols = parts[0].cols;
  int32_t rows = 0;
  for (const Var& part : parts) {
    if (part.cols != cols) fail(ErrorCode::validation, "concat column mismatch");
    rows += part.rows;
  }
  Var v = push(Op::concat_rows, rows, cols, -1, -1);
  for (const Var& part : parts) nodes_.back().extra.push_back(part.id);
  double* out = val(v.id);
  for (const Var& part : parts) {
    std::memcpy(out, val(part.id), sizeof(double) * static_cast<size_t>(part.rows) * cols);
    out += static_cast<size_t>(part.rows) * cols;
  }
  verify_finite(nodes_.back());
  return v;
}

Tape::Var Tape::row_gather(Var x, const std::vector<int32_t>& idx) {
  if (idx.empty()) fail(ErrorCode::validation, "row gather with empty index");
  for (int32_t i : idx)
    if (i < 0 || i >= x.rows) fail(ErrorCode::validation, "row gather index out of range");
  Var v = push(Op::row_gather, static_cast<int32_t>(idx.size()), x.cols, x.id, -1);
  nodes_.back().ext = &idx;
  const int32_t f = x.cols;
  const double* px = val(x.id);
  double* out = val(v.id);
  for (size_t r = 0; r < idx.size(); ++r) {
    std::memcpy(out + r * f, px + static_cast<size_t>(idx[r]) * f, sizeof(double) * f);
  }
  verify_finite(nodes_.back());
  return v;
}

Tape::Var Tape::sum(Var a) {
  Var v = push(Op::sum, 1, 1, a.id, -1);
  const double* pa = val(a.id);
  size_t count = static_cast<size_t>(a.rows) * a.cols;
  double acc = 0.0;
  for (size_t i = 0; i < count; ++i) acc += pa[i];
  *val(v.id) = acc;
  verify_finite(nodes_.back());
  return v;
}

Tape::Var Tape::sse(Var a, Var b) {
  if (a.rows != b.rows || a.cols != b.cols)
    fail(ErrorCode::validation, "sse shape mismatch");
  Var v = push(Op::sse, 1, 1, a.id, b.id);
  const double* pa = val(a.id);
  const double* pb = val(b.id);
  size_t count = static_cast<size_t>(a.rows) * a.cols;
  double acc = 0.0;
  for (size_t i = 0; i < count; ++i) {
    double d = pa[i] - pb[i];
    acc += d * d;
  }
  *val(v.id) = acc;
  verify_finite(nodes_.back());
  return v;
}

std::span<const double> Tape::value(Var v) const {
  const Node& n = nodes_.at(static_cast<size_t>(v.id));
  return {vals_.data() + n.off, static_cast<size_t>(n.rows) * n.cols};
}

double Tape::scalar(Var v) const {
  if (v.rows != 1 || v.cols != 1) fail(ErrorCode::validation, "scalar() on non 1x1 var");
  return value(v)[0];
}

void Tape::backward(Var loss) {
  if (loss.rows != 1 || loss.cols != 1)
    fail(ErrorCode::validation, "backward requires a scalar loss");
  if (grads_.size() < used_) grads_.resize(used_);
  std::memset(grads_.data(), 0, sizeof(double) * used_);
  grads_[nodes_[static_cast<size_t>(loss.id)].off] = 1.0;
  for (int32_t id = loss.id; id >= 0; --id) backward_node(id);
}

void Tape::backward_node(int32_t id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  const double* g = grads_.data() + n.off;
  const size_t count = static_cast<size_t>(n.rows) * n.cols;
  switch (n.op) {
    case Op::leaf: {
      if (n.leaf_tensor) {
        auto& tg = n.leaf_tensor->grad();
        for (size_t i = 0; i < count; ++i) tg[i] += g[i];
      }
      return;
    }
    case Op::constant:
      return;
    case Op::matmul: {
      const Node& a = nodes_[static_cast<size_t>(n.p0)];
      const Node& b = nodes_[static_cast<size_t>(n.p1)];
      matmul_acc_bt(g, vals_.data() + b.off, grads_.data() + a.off, a.rows, a.cols, b.cols);
      // gB += A^T * G via row-wise accumulation.
      const double* pa = vals_.data() + a.off;
      double* gb = grads_.data() + b.off;
      for (int32_t i = 0; i < a.rows; ++i) {
        const double* arow = pa + static_cast<size_t>(i) * a.cols;
        const double* grow = g + static_cast<size_t>(i) * b.cols;
        for (int32_t kk = 0; kk < a.cols; ++kk) {
          double av = arow[kk];
          if (av == 0.0) continue;
          double* gbrow = gb + static_cast<size_t>(kk) * b.cols;
          for (int32_t j = 0; j < b.cols; ++j) gbrow[j] += av * grow[j];
        }
      }
      return;
    }
    case Op::add_scaled: {
      double* ga = grd(n.p0);
      double* gb = grd(n.p1);
      for (size_t i = 0; i < count; ++i) {
        ga[i] += g[i];
        gb[i] += n.a * g[i];
      }
      return;
    }
    case Op::mul: {
      const double* pa = val(n.p0);
      const double* pb = val(n.p1);
      double* ga = grd(n.p0);
      double* gb = grd(n.p1);
      for (size_t i = 0; i < count; ++i) {
        ga[i] += pb[i] * g[i];
        gb[i] += pa[i] * g[i];
      }
      return;
    }
    case Op::scale: {
      double* ga = grd(n.p0);
      for (size_t i = 0; i < count; ++i) ga[i] += n.a * g[i];
      return;
    }
    case Op::add_rowvec: {
      double* ga = grd(n.p0);
      double* gb = grd(n.p1);
      for (size_t i = 0; i < count; ++i) ga[i] += g[i];
      for (int32_t i = 0; i < n.rows; ++i) {
        const double* grow = g + static_cast<size_t>(i) * n.cols;
        for (int32_t j = 0; j < n.cols; ++j) gb[j] += grow[j];
      }
      return;
    }
    case Op::relu: {
      const double* px = val(n.p0);
      double* ga = grd(n.p0);
      for (size_t i = 0; i < count; ++i)
        if (px[i] > 0.0) ga[i] += g[i];
      return;
    }
    case Op::softplus: {
      const double* px = val(n.p0);
      double* ga = grd(n.p0);
      for (size_t i = 0; i < count; ++i) ga[i] += g[i] * sigmoid_val(px[i]);
      return;
    }
    case Op::sigmoid: {
      const double* py = val(id);
      double* ga = grd(n.p0);
      for (size_t i = 0; i < count; ++i) ga[i] += g[i] * py[i] * (1.0 - py[i]);
      return;
    }
    case Op::dense_block_mix: {
      const auto& a = *static_cast<const std::vector<double>*>(n.ext);
      const int32_t p = n.i0;
      const int32_t f = n.cols;
      double* gx = grd(n.p0);
      for (int32_t b = 0; b < n.rows / p; ++b) {
        const double* gb = g + static_cast<size_t>(b) * p * f;
        double* gxb = gx + static_cast<size_t>(b) * p * f;
        for (int32_t i = 0; i < p; ++i) {
          const double* grow = gb + static_cast<size_t>(i) * f;
          for (int32_t j = 0; j < p; ++j) {
            double w = a[static_cast<size_t>(i) * p + j];
            if (w == 0.0) continue;
            double* gxrow = gxb + static_cast<size_t>(j) * f;
            for (int32_t c = 0; c < f; ++c) gxrow[c] += w * grow[c];
          }
        }
      }
      return;
    }
    case Op::dense_block_mix_multi: {
      const auto& mats = *static_cast<const std::vector<const std::vector<double>*>*>(n.ext);
      const int32_t p = n.i0;
      const int32_t f = n.cols;
      double* gx = grd(n.p0);
      for (int32_t b = 0; b < n.rows / p; ++b) {
        const std::vector<double>& a = *mats[static_cast<size_t>(b)];
        const double* gb = g + static_cast<size_t>(b) * p * f;
        double* gxb = gx + static_cast<size_t>(b) * p * f;
        for (int32_t i = 0; i < p; ++i) {
          const double* grow = gb + static_cast<size_t>(i) * f;
          for (int32_t j = 0; j < p; ++j) {
            double w = a[static_cast<size_t>(i) * p + j];
            if (w == 0.0) continue;
            double* gxrow = gxb + static_cast<size_t>(j) * f;
            for (int32_t c = 0; c < f; ++c) gxrow[c] += w * grow[c];
          }
        }
      }
      return;
    }
    case Op::sparse_block_mix: {
      const auto& a = *static_cast<const CsrMatrix*>(n.ext);
      const int32_t f = n.cols;
      double* gx = grd(n.p0);
      for (int32_t b = 0; b < n.rows / a.n; ++b) {
        const double* gb = g + static_cast<size_t>(b) * a.n * f;
        double* gxb = gx + static_cast<size_t>(b) * a.n * f;
        for (int32_t i = 0; i < a.n; ++i) {
          const double* grow = gb + static_cast<size_t>(i) * f;
          for (int32_t e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e) {
            double w = a.vals[static_cast<size_t>(e)];
            double* gxrow = gxb + static_cast<size_t>(a.col_idx[static_cast<size_t>(e)]) * f;
            for (int32_t c = 0; c < f; ++c) gxrow[c] += w * grow[c];
          }
        }
      }
      return;
    }
    case Op::mean_rows_blocks: {
      const int32_t p = n.i0;
      const int32_t f = n.cols;
      const double inv = 1.0 / p;
      double* gx = grd(n.p0);
      for (int32_t b = 0; b < n.rows; ++b) {
        const double* grow = g + static_cast<size_t>(b) * f;
        for (int32_t i = 0; i < p; ++i) {
          double* gxrow = gx + (static_cast<size_t>(b) * p + i) * f;
          for (int32_t j = 0; j < f; ++j) gxrow[j] += inv * grow[j];
        }
      }
      return;
    }
    case Op::repeat_rows_blocks: {
      const int32_t p = n.i0;
      const int32_t f = n.cols;
      double* gx = grd(n.p0);
      const int32_t src_rows = n.rows / p;
      for (int32_t b = 0; b < src_rows; ++b) {
        double* gxrow = gx + static_cast<size_t>(b) * f;
        for (int32_t i = 0; i < p; ++i) {
          const double* grow = g + (static_cast<size_t>(b) * p + i) * f;
          for (int32_t j = 0; j < f; ++j) gxrow[j] += grow[j];
        }
      }
      return;
    }
    case Op::concat_cols: {
      int32_t at = 0;
      for (int32_t pid : n.extra) {
        Node& pn = nodes_[static_cast<size_t>(pid)];
        double* gp = grads_.data() + pn.off;
        for (int32_t i = 0; i < n.rows; ++i) {
          const double* grow = g + static_cast<size_t>(i) * n.cols + at;
          double* gprow = gp + static_cast<size_t>(i) * pn.cols;
          for (int32_t j = 0; j < pn.cols; ++j) gprow[j] += grow[j];
        }
        at += pn.cols;
      }
      return;
    }
    case Op::concat_rows: {
      double* gat = grads_.data() + n.off;
      for (int32_t pid : n.extra) {
        Node& pn = nodes_[static_cast<size_t>(pid)];
        double* gp = grads_.data() + pn.off;
        size_t pcount = static_cast<size_t>(pn.rows) * pn.cols;
        for (size_t i = 0; i < pcount; ++i) gp[i] += gat[i];
        gat += pcount;
      }
      return;
    }
    case Op::row_gather: {
      const auto& idx = *static_cast<const std::vector<int32_t>*>(n.ext);
      const int32_t f = n.cols;
      double* gx = grd(n.p0);
      for (size_t r = 0; r < idx.size(); ++r) {
        const double* grow = g + r * f;
        double* gxrow = gx + static_cast<size_t>(idx[r]) * f;
        for (int32_t j = 0; j < f; ++j) gxrow[j] += grow[j];
      }
      return;
    }
    case Op::sum: {
      const Node& a = nodes_[static_cast<size_t>(n.p0)];
      double* ga = grads_.data() + a.off;
      size_t acount = static_cast<size_t>(a.rows) * a.cols;
      for (size_t i = 0; i < acount; ++i) ga[i] += g[0];
      return;
    }
    case Op::sse: {
      const Node& a = nodes_[static_cast<size_t>(n.p0)];
      const Node& b = nodes_[static_cast<size_t>(n.p1)];
      const double* pa = vals_.data() + a.off;
      const double* pb = vals_.data() + b.off;
      double* ga = grads_.data() + a.off;
      double* gb = grads_.data() + b.off;
      size_t acount = static_cast<size_t>(a.rows) * a.cols;
      for (size_t i = 0; i < acount; ++i) {
        double d = 2.0 * (pa[i] - pb[i]) * g[0];
        ga[i] += d;
        gb[i] -= d;
      }
      return;
    }
  }
}

}  // namespace galds
