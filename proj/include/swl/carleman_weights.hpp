#pragma once

#include "swl/domain_grid.hpp"
#include "swl/fields_ops.hpp"

#include <cmath>
#include <limits>

namespace swl {

// Closed forms, templated on the array scalar. y and r are node arrays of equal length.

template <class Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> weight_f_radial(
    const Eigen::ArrayBase<Derived>& y, double kappa) {
  return -y.pow(1.0 + 2.0 * kappa) / (1.0 + 2.0 * kappa);
}

/// w_{f,z} = -2k y^{2k-1} + (n-1)/2 y^{2k}/r - 3c
template <class Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> w_fz(const Eigen::ArrayBase<Derived>& y,
                                                              const Eigen::ArrayBase<Derived>& r,
                                                              int n, double kappa, double c) {
  const double k = kappa;
  return -2.0 * k * y.pow(2.0 * k - 1.0) + 0.5 * (n - 1) * y.pow(2.0 * k) / r - 3.0 * c;
}

/// d_r w_{f,z}
template <class Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> dr_w_fz(
    const Eigen::ArrayBase<Derived>& y, const Eigen::ArrayBase<Derived>& r, int n, double kappa) {
  const double k = kappa;
  return 2.0 * k * (2.0 * k - 1.0) * y.pow(2.0 * k - 2.0) -
         (n - 1) * k * y.pow(2.0 * k - 1.0) / r - 0.5 * (n - 1) * y.pow(2.0 * k) / (r * r);
}

template <class Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> A_fz(const Eigen::ArrayBase<Derived>& y,
                                                              const Eigen::ArrayBase<Derived>& r,
                                                              int n, double kappa) {
  const double k = kappa;
  const double m = n - 1;
  return 2.0 * k * (2.0 * k - 1.0) * (2.0 * k - 1.0) * y.pow(2.0 * k - 3.0) -
         0.5 * m * k * (8.0 * k - 3.0) * y.pow(2.0 * k - 2.0) / r +
         0.5 * m * (n - 4) * k * y.pow(2.0 * k - 1.0) / (r * r) +
         0.25 * m * (n - 3) * y.pow(2.0 * k) / (r * r * r);
}

template <class Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> f_q(const Eigen::ArrayBase<Derived>& y,
                                                             double q) {
  return -y.pow(1.0 + q) / (1.0 + q);
}

template <class Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> w_q(const Eigen::ArrayBase<Derived>& y,
                                                             const Eigen::ArrayBase<Derived>& r,
                                                             int n, double kappa, double q) {
  return -(kappa + 0.5 * q) * y.pow(q - 1.0) + 0.5 * (n - 1) * y.pow(q) / r;
}

template <class Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> A_q(const Eigen::ArrayBase<Derived>& y,
                                                             const Eigen::ArrayBase<Derived>& r,
                                                             int n, double kappa, double q) {
  const double k = kappa;
  const double m = n - 1;
  return 0.25 * (q + 2.0 * k) * (q + 2.0 * k - 2.0) * (q - 1.0) * y.pow(q - 3.0) -
         0.5 * m * (q * q - q + 2.0 * k * q - k) * y.pow(q - 2.0) / r +
         0.25 * m * (q * (n - 3) - 2.0 * k) * y.pow(q - 1.0) / (r * r) +
         0.25 * m * (n - 3) * y.pow(q) / (r * r * r);
}

/// e^{2 lambda f} evaluated in log space and clamped below at the smallest normal.
inline double exp_clamped(double exponent) {
  static const double floor_log = std::log(std::numeric_limits<double>::min());
  return std::exp(std::max(exponent, floor_log));
}

struct WeightFields {
  double c = 0.0;
  double lambda = 0.0;
  double z = 0.0;  ///< -4c
  Mat f;           ///< time x radius
  Mat exp2lf;
  Mat A0;          ///< lambda^2 (y^{4k} - 4 c^2 t^2) - 8 c lambda
  Vec dt_f;        ///< -2 c t, per time node
  // Time-independent profiles, per radial node.
  Vec dr_f;        ///< y^{2k}
  Vec w_fz;
  Vec dr_w;
  Vec A_fz;
};

/// Rejects kappa outside (-1/2, 0) and n = 2 before evaluating.
WeightFields eval_weight_bundle(const Params& p, const Grids& g);
/// Recompute only the lambda-dependent members.
void set_lambda(WeightFields& wf, double lambda, const Grids& g, const Params& p);

struct FqBundle {
  double q = 0.0;
  Vec f, w, A;
};
FqBundle eval_fq_bundle(double q, const Params& p, const RadialGrid& grid);

/// S_{f,z} u = y^{2k} D_r u + 2 c t d_t u + w_{f,z} u.
Mat eval_S_multiplier(const Mat& u, const GradientBundle& grad, const WeightFields& wf,
                      const Grids& g);

/// Weight curvature c as a function of (n, kappa, T); asserts the admissibility caps.
double select_c(int n, double kappa, double T);

}  // namespace swl
