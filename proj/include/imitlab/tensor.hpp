#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace imitlab {

/// Dense row-major 3-index array, used for every (h, s, a)-indexed quantity.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t n0, std::size_t n1, std::size_t n2, double fill = 0.0)
      : n0_(n0), n1_(n1), n2_(n2), data_(n0 * n1 * n2, fill) {}
  Tensor3(std::size_t n0, std::size_t n1, std::size_t n2, std::vector<double> data)
      : n0_(n0), n1_(n1), n2_(n2), data_(std::move(data)) {
    if (data_.size() != n0 * n1 * n2) throw std::invalid_argument("Tensor3: data size does not match shape");
  }

  std::size_t dim0() const { return n0_; }
  std::size_t dim1() const { return n1_; }
  std::size_t dim2() const { return n2_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j, std::size_t k) { return data_[(i * n1_ + j) * n2_ + k]; }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const { return data_[(i * n1_ + j) * n2_ + k]; }

  std::span<double> row(std::size_t i, std::size_t j) { return {data_.data() + (i * n1_ + j) * n2_, n2_}; }
  std::span<const double> row(std::size_t i, std::size_t j) const {
    return {data_.data() + (i * n1_ + j) * n2_, n2_};
  }
  std::span<const double> slice(std::size_t i) const { return {data_.data() + i * n1_ * n2_, n1_ * n2_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Tensor3& o) const { return n0_ == o.n0_ && n1_ == o.n1_ && n2_ == o.n2_; }

  std::string shape_string() const {
    return "(" + std::to_string(n0_) + ", " + std::to_string(n1_) + ", " + std::to_string(n2_) + ")";
  }

  bool operator==(const Tensor3&) const = default;

 private:
  std::size_t n0_ = 0, n1_ = 0, n2_ = 0;
  std::vector<double> data_;
};

/// Per-step state distribution, indexed [h][s].
using StateDist = std::vector<std::vector<double>>;

}  // namespace imitlab
