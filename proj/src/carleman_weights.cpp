#include "swl/carleman_weights.hpp"

#include <algorithm>
#include <cmath>

namespace swl {

WeightFields eval_weight_bundle(const Params& p, const Grids& g) {
  validate(p);
  const Eigen::ArrayXd y = g.radial.y.array(), r = g.radial.r.array();
  const double k = p.kappa;
  WeightFields wf;
  wf.c = p.c;
  wf.z = -4.0 * p.c;
  wf.dr_f = y.pow(2.0 * k).matrix();
  wf.w_fz = w_fz(y, r, p.n, k, p.c).matrix();
  wf.dr_w = dr_w_fz(y, r, p.n, k).matrix();
  wf.A_fz = A_fz(y, r, p.n, k).matrix();
  wf.dt_f = -2.0 * p.c * g.time.t;

  const Eigen::ArrayXd F = weight_f_radial(y, k);
  const Eigen::ArrayXd t2 = g.time.t.array().square();
  wf.f = (F.transpose().replicate(g.time.size(), 1) -
          (p.c * t2).replicate(1, g.radial.size()))
             .matrix();
  set_lambda(wf, p.lambda, g, p);
  return wf;
}

void set_lambda(WeightFields& wf, double lambda, const Grids& g, const Params& p) {
  wf.lambda = lambda;
  wf.exp2lf = wf.f.unaryExpr([lambda](double fv) { return exp_clamped(2.0 * lambda * fv); });
  const Eigen::ArrayXd y4k = g.radial.y.array().pow(4.0 * p.kappa);
  const Eigen::ArrayXd t2 = g.time.t.array().square();
  wf.A0 = (lambda * lambda *
               (y4k.transpose().replicate(g.time.size(), 1) -
                (4.0 * p.c * p.c * t2).replicate(1, g.radial.size())) -
           8.0 * p.c * lambda)
              .matrix();
}

FqBundle eval_fq_bundle(double q, const Params& p, const RadialGrid& grid) {
  if (q == -1.0) throw ConfigError("eval_fq_bundle: q = -1 is excluded");
  const Eigen::ArrayXd y = grid.y.array(), r = grid.r.array();
  FqBundle b;
  b.q = q;
  b.f = f_q(y, q).matrix();
  b.w = w_q(y, r, p.n, p.kappa, q).matrix();
  b.A = A_q(y, r, p.n, p.kappa, q).matrix();
  return b;
}

Mat eval_S_multiplier(const Mat& u, const GradientBundle& grad, const WeightFields& wf,
                      const Grids& g) {
  if (u.rows() != grad.Dr_u.rows() || u.cols() != grad.Dr_u.cols() ||
      u.rows() != wf.f.rows() || u.cols() != wf.f.cols()) {
    throw ConfigError("eval_S_multiplier: shape mismatch");
  }
  const Vec two_ct = 2.0 * wf.c * g.time.t;
  return grad.Dr_u * wf.dr_f.asDiagonal() + two_ct.asDiagonal() * grad.dt_u +
         u * wf.w_fz.asDiagonal();
}

double select_c(int n, double kappa, double T) {
  Params probe;
  probe.n = n;
  probe.kappa = kappa;
  probe.T = T;
  validate(probe);
  double c = 0.0;
  if (n >= 4) {
    c = 1.0 / (4.0 * std::sqrt(3.0) * T);
  } else if (n == 3) {
    c = std::min(1.0 / (4.0 * std::sqrt(15.0) * T), std::abs(kappa) / 120.0);
  } else {
    c = 1.0 / (4.0 * std::sqrt(15.0) * T);
  }
  // Small T pushes c past 1/5; cap it so that the admissibility caps still hold.
  c = std::min(c, 0.2 * (1.0 - 1e-9));
  probe.c = c;
  probe.carleman_admissible = true;
  validate(probe);
  return c;
}

}  // namespace swl
