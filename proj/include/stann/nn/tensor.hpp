#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace stann {

// Dense 4-D array, indexed batch x height x width x channels, stored
// row-major in that order. Convolution kernels reuse the same container with
// dims read as (kh, kw, in_channels, out_channels).
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(int d0, int d1, int d2, int d3)
      : d0_(d0), d1_(d1), d2_(d2), d3_(d3),
        v_(static_cast<std::size_t>(d0) * d1 * d2 * d3, 0.0) {}

  int dim0() const { return d0_; }
  int dim1() const { return d1_; }
  int dim2() const { return d2_; }
  int dim3() const { return d3_; }
  std::size_t size() const { return v_.size(); }

  double& operator()(int a, int b, int c, int d) {
    return v_[((static_cast<std::size_t>(a) * d1_ + b) * d2_ + c) * d3_ + d];
  }
  const double& operator()(int a, int b, int c, int d) const {
    return v_[((static_cast<std::size_t>(a) * d1_ + b) * d2_ + c) * d3_ + d];
  }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  void set_zero() { std::fill(v_.begin(), v_.end(), 0.0); }

  bool same_shape(const Tensor4& o) const {
    return d0_ == o.d0_ && d1_ == o.d1_ && d2_ == o.d2_ && d3_ == o.d3_;
  }

 private:
  int d0_ = 0, d1_ = 0, d2_ = 0, d3_ = 0;
  std::vector<double> v_;
};

// A length-T sequence of (features x batch) matrices.
using SeqBatch = std::vector<Eigen::MatrixXd>;

}  // namespace stann
