#include "galds/adam.hpp"

#include <cmath>

#include "galds/error.hpp"

namespace galds {

Adam::Adam(std::vector<Tensor*> params, AdamConfig cfg)
    : cfg_(cfg), params_(std::move(params)) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Tensor* p : params_) {
    if (!p->requires_grad())
      fail(ErrorCode::validation, "optimizer parameter without requires_grad");
    m_.emplace_back(static_cast<size_t>(p->size()), 0.0);
    v_.emplace_back(static_cast<size_t>(p->size()), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    Tensor& p = *params_[pi];
    const std::vector<double>& g = p.grad();
    std::vector<double>& m = m_[pi];
    std::vector<double>& v = v_[pi];
    std::vector<double>& x = p.values();
    for (size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i]))
        fail(ErrorCode::numeric, "non-finite gradient in optimizer step");
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      x[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (Tensor* p : params_) p->zero_grad();
}

}  // namespace galds
