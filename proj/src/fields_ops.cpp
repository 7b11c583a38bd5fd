#include "swl/fields_ops.hpp"

#include <cmath>

namespace swl {

namespace {

void check_shape(const Mat& m, const Grids& g, const char* who) {
  if (m.rows() != g.time.size() || m.cols() != g.radial.size()) {
    throw ConfigError(std::string(who) + ": field shape does not match grids");
  }
  if (m.rows() < 5 || m.cols() < 5) {
    throw ConfigError(std::string(who) + ": need at least 5 nodes in each direction");
  }
}

Vec ypow(const RadialGrid& grid, double s) { return grid.y.array().pow(s).matrix(); }

}  // namespace

GhostLaw u_ghost(int ell) {
  const double sign = (ell % 2 == 0) ? 1.0 : -1.0;
  return [sign](double) { return sign; };
}

GhostLaw h_ghost(int ell, double kappa) {
  const double sign = (ell % 2 == 0) ? 1.0 : -1.0;
  return [sign, kappa](double r) { return sign * std::pow((1.0 + r) / (1.0 - r), kappa - 1.0); };
}

Mat u_from_h(const ModeField& field, const RadialGrid& grid, const Params& p) {
  if (field.h.cols() != grid.size()) throw ConfigError("u_from_h: radial size mismatch");
  return field.h * ypow(grid, 1.0 - p.kappa).asDiagonal();
}

ModeField h_from_u(int ell, const Mat& u, const RadialGrid& grid, const Params& p) {
  if (u.cols() != grid.size()) throw ConfigError("h_from_u: radial size mismatch");
  return ModeField{ell, u * ypow(grid, p.kappa - 1.0).asDiagonal()};
}

GradientBundle apply_D(const ModeField& field, const Grids& g, const Params& p) {
  check_shape(field.h, g, "apply_D");
  const double k = p.kappa;
  const RadialDiff D = build_radial_diff(g.radial, h_ghost(field.ell, k));
  const Mat hr = D.rows1(field.h);
  const Vec y1k = ypow(g.radial, 1.0 - k);
  const Vec ymk = ypow(g.radial, -k);

  GradientBundle b;
  b.Dr_u = hr * y1k.asDiagonal() - (1.0 - 2.0 * k) * field.h * ymk.asDiagonal();
  const Mat u = field.h * y1k.asDiagonal();
  b.dt_u = time_d1(u, g.time);
  const double mu = angular_eigenvalue(field.ell, p.n);
  const Vec inv_r2 = g.radial.r.array().square().inverse().matrix();
  b.angular_sq = (mu * u.array().square()).matrix() * inv_r2.asDiagonal();
  return b;
}

Mat apply_Dbar_r(const Mat& u, int ell, const Grids& g, const Params& p) {
  check_shape(u, g, "apply_Dbar_r");
  const RadialDiff D = build_radial_diff(g.radial, u_ghost(ell));
  const Vec k_over_y = (p.kappa / g.radial.y.array()).matrix();
  return D.rows1(u) - u * k_over_y.asDiagonal();
}

Mat apply_box_kappa(const ModeField& field, const Grids& g, const Params& p) {
  check_shape(field.h, g, "apply_box_kappa");
  const double k = p.kappa;
  const int n = p.n;
  const RadialGrid& rg = g.radial;
  const RadialDiff D = build_radial_diff(rg, h_ghost(field.ell, k));
  const Mat hr = D.rows1(field.h);
  const Mat hrr = D.rows2(field.h);
  const Mat htt = time_d2(field.h, g.time);
  const double mu = angular_eigenvalue(field.ell, n);

  const Eigen::ArrayXd r = rg.r.array(), y = rg.y.array();
  const Vec c_hr = (-2.0 * (1.0 - k) / y + (n - 1) / r).matrix();
  const Vec c_h = (-(1.0 - k) * (n - 1) / (r * y) - mu / (r * r)).matrix();

  Mat bracket = -htt + hrr + hr * c_hr.asDiagonal() + field.h * c_h.asDiagonal();
  return bracket * ypow(rg, 1.0 - k).asDiagonal();
}

Mat apply_box_y(const ModeField& field, const Grids& g, const Params& p) {
  Mat out = apply_box_kappa(field, g, p);
  if (p.n == 1) return out;
  const Eigen::ArrayXd r = g.radial.r.array(), y = g.radial.y.array();
  const Vec coef = ((p.n - 1) * p.kappa / (r * y)).matrix();
  out += u_from_h(field, g.radial, p) * coef.asDiagonal();
  return out;
}

Mat apply_box_kappa_direct(const Mat& u, int ell, const Grids& g, const Params& p) {
  check_shape(u, g, "apply_box_kappa_direct");
  const RadialDiff D = build_radial_diff(g.radial, u_ghost(ell));
  const double k = p.kappa;
  const double mu = angular_eigenvalue(ell, p.n);
  const Eigen::ArrayXd r = g.radial.r.array(), y = g.radial.y.array();
  const Vec c_ur = ((p.n - 1) / r).matrix();
  const Vec c_u = (k * (1.0 - k) / (y * y) - mu / (r * r)).matrix();
  return -time_d2(u, g.time) + D.rows2(u) + D.rows1(u) * c_ur.asDiagonal() +
         u * c_u.asDiagonal();
}

}  // namespace swl
