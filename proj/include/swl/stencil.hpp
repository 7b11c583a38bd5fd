#pragma once

#include "swl/domain_grid.hpp"

#include <vector>

namespace swl {

/// Finite-difference weights (Fornberg). Row m of the result holds the
/// weights for the m-th derivative at x0 from the sample points xs.
Eigen::MatrixXd fd_weights(double x0, const std::vector<double>& xs, int max_derivative);

struct GaussRule {
  std::vector<double> x;  ///< nodes on [-1, 1]
  std::vector<double> w;
};
/// Eight-point Gauss-Legendre rule, computed once.
const GaussRule& gauss_legendre_rule();

/// Radial first/second derivative stencils with `width` points per node.
/// Interior nodes use centred stencils. Near r = 0 a mirror ghost at -r_k
/// with value ghost_factor(r_k) * v_k is folded in when a ghost law is given;
/// near r = 1 the stencil becomes one-sided.
struct RadialDiff {
  int width = 3;
  std::vector<Index> first;
  Eigen::MatrixXd d1, d2;  ///< N x width

  template <class Derived>
  Vec apply1(const Eigen::MatrixBase<Derived>& v) const {
    return apply(d1, v);
  }
  template <class Derived>
  Vec apply2(const Eigen::MatrixBase<Derived>& v) const {
    return apply(d2, v);
  }
  /// Row-wise radial derivative of spacetime samples.
  Mat rows1(const Mat& m) const;
  Mat rows2(const Mat& m) const;

 private:
  template <class Derived>
  Vec apply(const Eigen::MatrixXd& wts, const Eigen::MatrixBase<Derived>& v) const {
    const Index N = static_cast<Index>(first.size());
    Vec out(N);
    for (Index j = 0; j < N; ++j) {
      double s = 0.0;
      for (int k = 0; k < width; ++k) s += wts(j, k) * v(first[j] + k);
      out(j) = s;
    }
    return out;
  }
  Mat rows(const Eigen::MatrixXd& wts, const Mat& m) const;
};

/// Ghost law for nodal data at the mirror point -r: value = factor(r) * v(r).
using GhostLaw = std::function<double(double)>;

RadialDiff build_radial_diff(const RadialGrid& grid, const GhostLaw& ghost, int width = 5);

/// Fourth-order time derivatives along the columns of spacetime samples.
Mat time_d1(const Mat& m, const TimeGrid& tg);
Mat time_d2(const Mat& m, const TimeGrid& tg);

}  // namespace swl
