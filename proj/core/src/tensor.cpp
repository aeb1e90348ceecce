#include "galds/tensor.hpp"

#include <cmath>
#include <sstream>

#include "galds/error.hpp"

namespace galds {

int64_t shape_numel(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) fail(ErrorCode::validation, "negative tensor dimension");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int64_t> shape, bool requires_grad)
    : shape_(std::move(shape)),
      values_(static_cast<size_t>(shape_numel(shape_)), 0.0),
      requires_grad_(requires_grad) {
  if (requires_grad_) grad_.assign(values_.size(), 0.0);
}

Tensor Tensor::zeros(std::vector<int64_t> shape, bool requires_grad) {
  return Tensor(std::move(shape), requires_grad);
}

Tensor Tensor::from(std::vector<int64_t> shape, std::vector<double> values,
                    bool requires_grad) {
  Tensor t(std::move(shape), requires_grad);
  if (static_cast<int64_t>(values.size()) != t.size())
    fail(ErrorCode::validation, "tensor value count does not match shape " + t.shape_str());
  t.values_ = std::move(values);
  return t;
}

void Tensor::set_requires_grad(bool on) {
  requires_grad_ = on;
  if (on && grad_.size() != values_.size()) grad_.assign(values_.size(), 0.0);
}

std::vector<double>& Tensor::grad() {
  if (!requires_grad_) fail(ErrorCode::validation, "grad access on tensor without requires_grad");
  return grad_;
}

const std::vector<double>& Tensor::grad() const {
  if (!requires_grad_) fail(ErrorCode::validation, "grad access on tensor without requires_grad");
  return grad_;
}

void Tensor::zero_grad() {
  if (requires_grad_) grad_.assign(values_.size(), 0.0);
}

bool Tensor::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  if (requires_grad_)
    for (double g : grad_)
      if (!std::isfinite(g)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
  os << "]";
  return os.str();
}

}  // namespace galds
