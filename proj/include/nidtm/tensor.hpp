#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "nidtm/error.hpp"

namespace nidtm {

/// Dense k x k x k tensor of doubles (row-major over the three indices).
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int k) : k_(k), data_(static_cast<std::size_t>(k) * k * k, 0.0) {}

  int dim() const noexcept { return k_; }

  double& operator()(int i, int j, int l) { return data_[index(i, j, l)]; }
  double operator()(int i, int j, int l) const { return data_[index(i, j, l)]; }

  Tensor3& operator+=(const Tensor3& o) {
    check_same(o);
    for (std::size_t n = 0; n < data_.size(); ++n) data_[n] += o.data_[n];
    return *this;
  }
  Tensor3& operator-=(const Tensor3& o) {
    check_same(o);
    for (std::size_t n = 0; n < data_.size(); ++n) data_[n] -= o.data_[n];
    return *this;
  }
  Tensor3& operator*=(double s) {
    for (double& x : data_) x *= s;
    return *this;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (double x : data_) s += x * x;
    return std::sqrt(s);
  }

  double max_abs_off_diagonal() const {
    double m = 0.0;
    for (int i = 0; i < k_; ++i)
      for (int j = 0; j < k_; ++j)
        for (int l = 0; l < k_; ++l)
          if (!(i == j && j == l)) m = std::max(m, std::abs((*this)(i, j, l)));
    return m;
  }

  /// T(I, u, u)
  Eigen::VectorXd apply_two(const Eigen::VectorXd& u) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(k_);
    for (int i = 0; i < k_; ++i) {
      double s = 0.0;
      for (int j = 0; j < k_; ++j) {
        double t = 0.0;
        for (int l = 0; l < k_; ++l) t += (*this)(i, j, l) * u[l];
        s += t * u[j];
      }
      out[i] = s;
    }
    return out;
  }

  /// T(u, u, u)
  double apply_three(const Eigen::VectorXd& u) const { return u.dot(apply_two(u)); }

  /// this += scale * a (x) b (x) c
  void add_outer(double scale, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                 const Eigen::VectorXd& c) {
    for (int i = 0; i < k_; ++i)
      for (int j = 0; j < k_; ++j) {
        const double ab = scale * a[i] * b[j];
        for (int l = 0; l < k_; ++l) (*this)(i, j, l) += ab * c[l];
      }
  }

  /// this += scale * (P_ij y_l + P_il y_j + P_jl y_i)
  void add_pair_placements(double scale, const Eigen::MatrixXd& p, const Eigen::VectorXd& y) {
    for (int i = 0; i < k_; ++i)
      for (int j = 0; j < k_; ++j)
        for (int l = 0; l < k_; ++l)
          (*this)(i, j, l) += scale * (p(i, j) * y[l] + p(i, l) * y[j] + p(j, l) * y[i]);
  }

  /// Average over the six index permutations.
  void symmetrize() {
    Tensor3 out(k_);
    for (int i = 0; i < k_; ++i)
      for (int j = 0; j < k_; ++j)
        for (int l = 0; l < k_; ++l) {
          const Tensor3& t = *this;
          out(i, j, l) = (t(i, j, l) + t(i, l, j) + t(j, i, l) + t(j, l, i) + t(l, i, j) +
                          t(l, j, i)) /
                         6.0;
        }
    *this = std::move(out);
  }

  /// T(B, B, B) for a k x m matrix B; returns an m x m x m tensor.
  Tensor3 multilinear(const Eigen::MatrixXd& b) const {
    if (b.rows() != k_) fail(ErrorKind::InvalidInput, "multilinear: dimension mismatch");
    const int m = static_cast<int>(b.cols());
    // contract one mode at a time: O(k^3 m + k^2 m^2 + k m^3)
    std::vector<double> t1(static_cast<std::size_t>(k_) * k_ * m, 0.0);
    for (int i = 0; i < k_; ++i)
      for (int j = 0; j < k_; ++j)
        for (int l = 0; l < k_; ++l) {
          const double x = (*this)(i, j, l);
          if (x == 0.0) continue;
          for (int c = 0; c < m; ++c) t1[(i * k_ + j) * m + c] += x * b(l, c);
        }
    std::vector<double> t2(static_cast<std::size_t>(k_) * m * m, 0.0);
    for (int i = 0; i < k_; ++i)
      for (int j = 0; j < k_; ++j)
        for (int c = 0; c < m; ++c) {
          const double x = t1[(i * k_ + j) * m + c];
          for (int bb = 0; bb < m; ++bb) t2[(i * m + bb) * m + c] += x * b(j, bb);
        }
    Tensor3 out(m);
    for (int i = 0; i < k_; ++i)
      for (int a = 0; a < m; ++a) {
        const double w = b(i, a);
        if (w == 0.0) continue;
        for (int bb = 0; bb < m; ++bb)
          for (int c = 0; c < m; ++c) out(a, bb, c) += w * t2[(i * m + bb) * m + c];
      }
    return out;
  }

 private:
  std::size_t index(int i, int j, int l) const {
    return (static_cast<std::size_t>(i) * k_ + j) * k_ + l;
  }
  void check_same(const Tensor3& o) const {
    if (o.k_ != k_) fail(ErrorKind::InvalidInput, "tensor dimension mismatch");
  }

  int k_ = 0;
  std::vector<double> data_;
};

}  // namespace nidtm
