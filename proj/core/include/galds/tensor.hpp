#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace galds {

// Dense float64 tensor. Shape is fixed at construction; `grad` is allocated
// lazily when requires_grad is set and always matches `values` in size.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<int64_t> shape, bool requires_grad = false);
  static Tensor zeros(std::vector<int64_t> shape, bool requires_grad = false);
  static Tensor from(std::vector<int64_t> shape, std::vector<double> values,
                     bool requires_grad = false);

  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t size() const { return static_cast<int64_t>(values_.size()); }
  int64_t dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  int rank() const { return static_cast<int>(shape_.size()); }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool on);

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& grad();
  const std::vector<double>& grad() const;
  void zero_grad();

  double& at(int64_t i) { return values_[static_cast<size_t>(i)]; }
  double at(int64_t i) const { return values_[static_cast<size_t>(i)]; }

  bool all_finite() const;
  std::string shape_str() const;

 private:
  std::vector<int64_t> shape_;
  std::vector<double> values_;
  std::vector<double> grad_;
  bool requires_grad_ = false;
};

int64_t shape_numel(const std::vector<int64_t>& shape);

}  // namespace galds
