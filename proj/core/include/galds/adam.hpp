#pragma once

#include <cstdint>
#include <vector>

#include "galds/tensor.hpp"

namespace galds {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam over a fixed set of borrowed parameter tensors. Moment buffers are
// allocated up front; step() consumes accumulated grads and leaves them
// untouched (call zero_grad between epochs).
class Adam {
 public:
  Adam(std::vector<Tensor*> params, AdamConfig cfg = {});

  void step();
  void zero_grad();
  int64_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<Tensor*> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  int64_t t_ = 0;
};

}  // namespace galds
