#include "swl/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace swl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Vec ypow(const RadialGrid& g, double s) { return g.y.array().pow(s).matrix(); }

// Pointwise quantities of a mode field on all nodes, u-representation.
struct NodeFields {
  Mat u, ut, Dru, ang;
  double mu = 0.0;
};

NodeFields node_fields(const ModeField& f, const Grids& g, const Params& p) {
  NodeFields nf;
  nf.u = u_from_h(f, g.radial, p);
  GradientBundle b = apply_D(f, g, p);
  nf.ut = std::move(b.dt_u);
  nf.Dru = std::move(b.Dr_u);
  nf.ang = std::move(b.angular_sq);
  nf.mu = angular_eigenvalue(f.ell, p.n);
  return nf;
}

// Node fields of v = e^{lambda f} u. The weight is only Hoelder at y = 0, so
// derivatives go through the product rule instead of differencing v.
NodeFields conjugated_fields(const ModeField& u, const WeightFields& wf, const Mat& elf,
                             double lambda, const Grids& g, const Params& p) {
  const NodeFields nu = node_fields(u, g, p);
  NodeFields nv;
  nv.mu = nu.mu;
  nv.u = (elf.array() * nu.u.array()).matrix();
  nv.ut = (elf.array() * (nu.ut + lambda * wf.dt_f.asDiagonal() * nu.u).array()).matrix();
  nv.Dru = (elf.array() * (nu.Dru + lambda * nu.u * wf.dr_f.asDiagonal()).array()).matrix();
  nv.ang = (elf.array().square() * nu.ang.array()).matrix();
  return nv;
}

// Sum over time of tw_i * density_i at one sphere r = rb, surface measure included.
double sphere_time_integral(const Vec& density, const TimeGrid& tg, double rb, int n) {
  return tg.w.dot(density) * std::pow(rb, n - 1) * sphere_area(n);
}

void require_time_compact(const ModeField& u, const char* who) {
  const double scale = u.h.cwiseAbs().maxCoeff();
  const Index nt = u.h.rows();
  const double edge = std::max(u.h.topRows(2).cwiseAbs().maxCoeff(),
                               u.h.bottomRows(2).cwiseAbs().maxCoeff());
  if (nt < 5 || edge > 1e-12 * std::max(scale, kScaleFloor)) {
    throw ConfigError(std::string(who) + ": field is not supported inside |t| < T");
  }
}

struct SideValues {
  double rb = 0.0, yb = 0.0, sgn = 0.0;  // sgn = +1 on r = 1 - eps, -1 on r = eps
  Vec u, ut, Dru, ang, S;
};

SideValues side_values(const NodeFields& nf, const Mat* S, const RadialGrid& grid, double rb,
                       double sgn) {
  SideValues s;
  s.rb = rb;
  s.yb = 1.0 - rb;
  s.sgn = sgn;
  const Probe pr = make_probe(grid, rb);
  s.u = pr.column(nf.u);
  s.ut = pr.column(nf.ut);
  s.Dru = pr.column(nf.Dru);
  s.ang = pr.column(nf.ang);
  if (S) s.S = pr.column(*S);
  return s;
}

double scalar_dr_w(double rb, int n, double kappa) {
  Eigen::ArrayXd y(1), r(1);
  y << 1.0 - rb;
  r << rb;
  return dr_w_fz(y, r, n, kappa)(0);
}

// The three Gamma_eps terms shared by the multiplier identity and its consequences.
struct BoundaryTerms {
  double flux_S = 0.0;    // - int S u D_nu u
  double flux_f = 0.0;    // 1/2 int nabla_nu f D_b u D^b u
  double flux_w = 0.0;    // 1/2 int nabla_nu w u^2
  double flux_hardy = 0.0;  // 2k(2k-1) int y^{2k-2} nabla_nu y u^2
};

BoundaryTerms boundary_terms(const SideValues& s, const TimeGrid& tg, const Params& p) {
  const double k = p.kappa;
  const int n = p.n;
  BoundaryTerms b;
  const double drf = std::pow(s.yb, 2.0 * k);
  const double drw = scalar_dr_w(s.rb, n, k);
  const Eigen::ArrayXd Dnu = s.sgn * s.Dru.array();
  b.flux_S = sphere_time_integral((-s.S.array() * Dnu).matrix(), tg, s.rb, n);
  const Eigen::ArrayXd DD = -s.ut.array().square() + s.Dru.array().square() + s.ang.array();
  b.flux_f = sphere_time_integral((0.5 * s.sgn * drf * DD).matrix(), tg, s.rb, n);
  b.flux_w = sphere_time_integral((0.5 * s.sgn * drw * s.u.array().square()).matrix(), tg, s.rb, n);
  // nabla_nu y = -sgn
  b.flux_hardy = sphere_time_integral(
      (2.0 * k * (2.0 * k - 1.0) * std::pow(s.yb, 2.0 * k - 2.0) * (-s.sgn) *
       s.u.array().square())
          .matrix(),
      tg, s.rb, n);
  return b;
}

double shell(const Mat& density, const Grids& g, const TruncationSpec& tr) {
  return integrate_shell_spacetime(density, g.time, g.radial, tr.epsilon, 1.0 - tr.epsilon);
}

// Least squares fit of Q(eps) = sum_k a_k eps^{e_k}; returns a_0.
double extrapolate_to_zero(const std::vector<double>& eps, const std::vector<double>& q,
                           const std::vector<double>& exponents) {
  const Index m = static_cast<Index>(eps.size());
  const Index k = static_cast<Index>(exponents.size());
  Eigen::MatrixXd A(m, k);
  Eigen::VectorXd b(m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < k; ++j) A(i, j) = std::pow(eps[i], exponents[j]);
    b(i) = q[i];
  }
  return A.colPivHouseholderQr().solve(b)(0);
}

// 0 followed by the `count` smallest distinct exponents i beta + j > 0;
// exponents closer than 0.1 are merged to keep the fit well conditioned.
std::vector<double> expansion_exponents(double beta, std::size_t count) {
  std::vector<double> all;
  for (int i = 0; i <= 6; ++i) {
    for (int j = 0; j <= 6; ++j) {
      const double e = (beta > 0.0 ? i * beta : 0.0) + j;
      if (e > 0.0) all.push_back(e);
    }
  }
  std::sort(all.begin(), all.end());
  std::vector<double> out{0.0};
  for (double e : all) {
    if (out.size() > count) break;
    if (e - out.back() >= 0.1) out.push_back(e);
  }
  return out;
}

}  // namespace

double IdentityReport::term(const std::string& key) const {
  for (const auto& [k, v] : terms) {
    if (k == key) return v;
  }
  return kNaN;
}

void validate(const TruncationSpec& tr, const RadialGrid& grid) {
  if (!(tr.epsilon > 0.0 && tr.epsilon < 0.5)) {
    throw ConfigError("truncation epsilon must lie in (0, 1/2)");
  }
  const Index inside =
      (grid.r.array() > tr.epsilon && grid.r.array() < 1.0 - tr.epsilon).count();
  if (inside < 8) throw ConfigError("truncated region holds fewer than 8 grid nodes");
}

void finish_identity(IdentityReport& rep, double tol) {
  rep.residual = std::abs(rep.lhs - rep.rhs);
  const double scale = std::max({std::abs(rep.lhs), std::abs(rep.rhs), kScaleFloor});
  rep.relative_residual = rep.residual / scale;
  rep.slack = rep.lhs - rep.rhs;
  rep.pass = std::isfinite(rep.relative_residual) && rep.relative_residual <= tol;
}

void finish_inequality(IdentityReport& rep, double tol) {
  rep.slack = rep.lhs - rep.rhs;
  rep.residual = std::abs(rep.slack);
  const double scale = std::max({std::abs(rep.lhs), std::abs(rep.rhs), kScaleFloor});
  rep.relative_residual = rep.residual / scale;
  rep.pass = std::isfinite(rep.slack) && rep.slack >= -tol * scale;
}

double refinement_order(const std::vector<double>& sizes, const std::vector<double>& errors) {
  if (sizes.size() != errors.size() || sizes.size() < 2) {
    throw ConfigError("refinement_order: need matching size/error lists of length >= 2");
  }
  const std::size_t m = sizes.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double x = std::log(sizes[i]);
    const double y = std::log(std::max(errors[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return -slope;
}

double interior_max_norm(const Mat& m, const RadialGrid& grid, double eps) {
  double out = 0.0;
  for (Index j = 0; j < grid.size(); ++j) {
    if (grid.r(j) > eps && grid.r(j) < 1.0 - eps) out = std::max(out, m.col(j).cwiseAbs().maxCoeff());
  }
  return out;
}

Vec neumann_trace(const ModeField& u, const RadialGrid& grid, const Params& p) {
  const Probe edge = make_probe(grid, 1.0);
  return -(1.0 - 2.0 * p.kappa) * edge.column(u.h);
}

IdentityReport check_hardy_pointwise(const ModeField& u, double q, const TruncationSpec& tr,
                                     const Grids& g, const Params& p, HardyOptions opt) {
  validate(p);
  validate(tr, g.radial);
  IdentityReport rep;
  rep.name = "hardy_pointwise";
  const NodeFields nf = node_fields(u, g, p);
  const double k = p.kappa;
  const double b = k + 0.5 * (q - 2.0);
  const Eigen::ArrayXd y = g.radial.y.array(), r = g.radial.r.array();

  const Mat lhs_d = nf.Dru.array().square().matrix() * y.pow(q - 1.0).matrix().asDiagonal();
  const Mat u2 = nf.u.array().square().matrix();
  const Mat main_d = u2 * (b * b * y.pow(q - 3.0)).matrix().asDiagonal();
  const Mat curv_d = u2 * ((p.n - 1) * b * y.pow(q - 2.0) / r).matrix().asDiagonal();

  double flux = 0.0;
  for (const auto& [rb, sgn] : {std::pair{1.0 - tr.epsilon, 1.0}, std::pair{tr.epsilon, -1.0}}) {
    const Vec ub = make_probe(g.radial, rb).column(nf.u);
    const double yb = 1.0 - rb;
    flux += sphere_time_integral((b * std::pow(yb, q - 2.0) * (-sgn) * ub.array().square()).matrix(),
                                 g.time, rb, p.n);
  }
  if (opt.flip_flux) flux = -flux;

  rep.lhs = shell(lhs_d, g, tr);
  const double main = shell(main_d, g, tr);
  const double curv = shell(curv_d, g, tr);
  rep.rhs = main - curv - flux;
  rep.terms = {{"q", q}, {"b", b}, {"main", main}, {"curvature", curv}, {"flux", flux}};
  rep.vacuous = (std::abs(rep.lhs) + std::abs(rep.rhs)) == 0.0;
  finish_inequality(rep, opt.tol);
  return rep;
}

namespace {

struct MultiplierParts {
  double lhs = 0.0;
  double hessian = 0.0;  // (nabla^{ab} f + z g^{ab}) D_a u D_b u
  double potential = 0.0;
  BoundaryTerms bnd;
  // Inequality pieces.
  double ineq_first_order = 0.0;
  double ineq_kappa = 0.0;
  double ineq_r3 = 0.0;
  double hardy_main = 0.0;  // int y^{2k-3} u^2
};

MultiplierParts multiplier_parts(const ModeField& u, const Params& p, const TruncationSpec& tr,
                                 const Grids& g) {
  validate(p);
  validate(tr, g.radial);
  require_time_compact(u, "multiplier check");
  const double k = p.kappa, c = p.c;
  const int n = p.n;
  const WeightFields wf = eval_weight_bundle(p, g);
  const NodeFields nf = node_fields(u, g, p);
  const Mat boxy = apply_box_y(u, g, p);
  GradientBundle gb{nf.ut, nf.Dru, nf.ang};
  const Mat S = eval_S_multiplier(nf.u, gb, wf, g);
  const Eigen::ArrayXd y = g.radial.y.array(), r = g.radial.r.array();

  MultiplierParts mp;
  mp.lhs = shell(-(boxy.array() * S.array()).matrix(), g, tr);

  const Mat Dr2 = nf.Dru.array().square().matrix();
  const Mat ut2 = nf.ut.array().square().matrix();
  const Mat u2 = nf.u.array().square().matrix();
  const Mat hess = nf.ang * (y.pow(2.0 * k) / r - 4.0 * c).matrix().asDiagonal() +
                   Dr2 * (-2.0 * k * y.pow(2.0 * k - 1.0) - 4.0 * c).matrix().asDiagonal() +
                   2.0 * c * ut2;
  mp.hessian = shell(hess, g, tr);
  mp.potential = shell(u2 * wf.A_fz.asDiagonal(), g, tr);

  for (const auto& [rb, sgn] : {std::pair{1.0 - tr.epsilon, 1.0}, std::pair{tr.epsilon, -1.0}}) {
    const SideValues sv = side_values(nf, &S, g.radial, rb, sgn);
    const BoundaryTerms bt = boundary_terms(sv, g.time, p);
    mp.bnd.flux_S += bt.flux_S;
    mp.bnd.flux_f += bt.flux_f;
    mp.bnd.flux_w += bt.flux_w;
    mp.bnd.flux_hardy += bt.flux_hardy;
  }

  mp.ineq_first_order = shell((1.0 - 4.0 * c) * nf.ang + 2.0 * c * ut2 - 4.0 * c * Dr2, g, tr);
  mp.ineq_kappa = shell(
      u2 * (-0.5 * (n - 1) * k * y.pow(2.0 * k - 2.0) / (r * r) * (r - (n - 4) * y))
               .matrix()
               .asDiagonal(),
      g, tr);
  mp.ineq_r3 =
      shell(u2 * (0.25 * (n - 1) * (n - 3) * y.pow(2.0 * k) / (r * r * r)).matrix().asDiagonal(),
            g, tr);
  mp.hardy_main = shell(u2 * y.pow(2.0 * k - 3.0).matrix().asDiagonal(), g, tr);
  return mp;
}

}  // namespace

IdentityReport check_multiplier_identity(const ModeField& u, const Params& p,
                                         const TruncationSpec& tr, const Grids& g, double tol) {
  const MultiplierParts mp = multiplier_parts(u, p, tr, g);
  IdentityReport rep;
  rep.name = "multiplier_identity";
  rep.lhs = mp.lhs;
  rep.rhs = mp.hessian + mp.potential + mp.bnd.flux_S + mp.bnd.flux_f + mp.bnd.flux_w;
  rep.terms = {{"hessian", mp.hessian},     {"potential", mp.potential},
               {"flux_S", mp.bnd.flux_S},   {"flux_f", mp.bnd.flux_f},
               {"flux_w", mp.bnd.flux_w}};
  rep.vacuous = (std::abs(rep.lhs) + std::abs(rep.rhs)) == 0.0;
  finish_identity(rep, tol);
  if (rep.vacuous) rep.pass = true;
  return rep;
}

IdentityReport check_multiplier_inequality(const ModeField& u, const Params& p,
                                           const TruncationSpec& tr, const Grids& g,
                                           MultiplierInequalityOptions opt) {
  const MultiplierParts mp = multiplier_parts(u, p, tr, g);
  IdentityReport rep;
  rep.name = "multiplier_inequality";
  rep.lhs = mp.lhs;
  rep.rhs = mp.ineq_first_order + mp.ineq_kappa + mp.ineq_r3 + mp.bnd.flux_S + mp.bnd.flux_f +
            mp.bnd.flux_w + mp.bnd.flux_hardy;
  if (opt.flip_hardy) {
    const double k = p.kappa;
    rep.rhs += 2.0 * (-2.0 * k) * (2.0 * k - 1.0) * (2.0 * k - 1.0) * mp.hardy_main;
  }
  rep.terms = {{"first_order", mp.ineq_first_order}, {"kappa_bulk", mp.ineq_kappa},
               {"r3_bulk", mp.ineq_r3},              {"flux_S", mp.bnd.flux_S},
               {"flux_f", mp.bnd.flux_f},            {"flux_w", mp.bnd.flux_w},
               {"flux_hardy", mp.bnd.flux_hardy}};
  rep.vacuous = (std::abs(rep.lhs) + std::abs(rep.rhs)) == 0.0;
  finish_inequality(rep, opt.tol);
  return rep;
}

std::vector<IdentityReport> check_closed_forms(const Params& p, const RadialGrid& grid,
                                               const std::vector<double>& q_list, double tol,
                                               double y_min) {
  validate(p);
  const double k = p.kappa, c = p.c;
  const int n = p.n;
  const Eigen::ArrayXd y = grid.y.array(), r = grid.r.array();
  const RadialDiff D = build_radial_diff(grid, GhostLaw{}, 5);

  std::vector<Index> region;
  for (Index j = 0; j < grid.size(); ++j) {
    if (grid.y(j) >= y_min && (n == 1 || grid.r(j) >= y_min)) region.push_back(j);
  }
  auto rel_error = [&](const Eigen::ArrayXd& num, const Eigen::ArrayXd& closed,
                       const Eigen::ArrayXd& input) {
    double err = 0.0, sc = kScaleFloor, si = 0.0;
    for (Index j : region) {
      err = std::max(err, std::abs(num(j) - closed(j)));
      sc = std::max(sc, std::abs(closed(j)));
      si = std::max(si, std::abs(input(j)));
    }
    return err / std::max(sc, si);
  };
  // 1/2 (Box phi + (2k/y) nabla y . nabla phi) for radial phi, plus the time part.
  auto w_def = [&](const Eigen::ArrayXd& phi, double time_box) {
    const Eigen::ArrayXd pr = D.apply1(phi.matrix()).array();
    const Eigen::ArrayXd prr = D.apply2(phi.matrix()).array();
    return Eigen::ArrayXd(0.5 * (time_box + prr + (n - 1) * pr / r - 2.0 * k * pr / y));
  };
  auto A_def = [&](const Eigen::ArrayXd& w) {
    const Eigen::ArrayXd wr = D.apply1(w.matrix()).array();
    const Eigen::ArrayXd wrr = D.apply2(w.matrix()).array();
    return Eigen::ArrayXd(-0.5 * (wrr + (n - 1) * wr / r - 2.0 * k * wr / y));
  };
  auto report = [&](const std::string& name, double err) {
    IdentityReport rep;
    rep.name = name;
    rep.lhs = err;
    rep.residual = err;
    rep.relative_residual = err;
    rep.pass = std::isfinite(err) && err <= tol;
    return rep;
  };

  std::vector<IdentityReport> out;

  // -d_tt(-c t^2) by a three-point stencil at t = 0.
  const double dt = 0.1;
  auto tf = [c](double t) { return -c * t * t; };
  const double time_box = -(tf(dt) - 2.0 * tf(0.0) + tf(-dt)) / (dt * dt);

  const Eigen::ArrayXd F = weight_f_radial(y, k);
  const Eigen::ArrayXd w_closed = w_fz(y, r, n, k, c);
  out.push_back(report("w_fz", rel_error(w_def(F, time_box) - 4.0 * c, w_closed, F)));
  const Eigen::ArrayXd A_closed = A_fz(y, r, n, k);
  out.push_back(report("A_fz", rel_error(A_def(w_closed), A_closed, w_closed)));

  for (double q : q_list) {
    const FqBundle fb = eval_fq_bundle(q, p, grid);
    const std::string tag = "[q=" + std::to_string(q) + "]";
    out.push_back(report("w_q" + tag, rel_error(w_def(fb.f.array(), 0.0), fb.w.array(), fb.f.array())));
    out.push_back(report("A_q" + tag, rel_error(A_def(fb.w.array()), fb.A.array(), fb.w.array())));
  }

  // w_{f,z} = w_{2k} + c - 4c and A_{f,z} = A_{2k}, node by node.
  const FqBundle f2k = eval_fq_bundle(2.0 * k, p, grid);
  out.push_back(report("w_fz_vs_w_2k",
                       rel_error(f2k.w.array() - 3.0 * c, w_closed, w_closed)));
  out.push_back(report("A_fz_vs_A_2k", rel_error(f2k.A.array(), A_closed, A_closed)));
  return out;
}

IdentityReport check_conjugated_bound(const ModeField& u, double lambda, const Params& p,
                                      const TruncationSpec& tr, const Grids& g, double tol) {
  validate(p);
  validate(tr, g.radial);
  require_time_compact(u, "check_conjugated_bound");
  if (!(lambda > 0.0)) throw ConfigError("check_conjugated_bound: lambda must be positive");
  const double k = p.kappa, c = p.c;
  const int n = p.n;
  Params pl = p;
  pl.lambda = lambda;
  const WeightFields wf = eval_weight_bundle(pl, g);

  const Mat elf = wf.f.unaryExpr([lambda](double fv) { return exp_clamped(lambda * fv); });
  IdentityReport rep;
  rep.name = "conjugated_bound";
  if (elf.maxCoeff() <= std::numeric_limits<double>::min() * 1.000001) {
    rep.vacuous = true;
    rep.pass = false;
    rep.terms = {{"underflow", 1.0}};
    return rep;
  }
  const Mat Lv = (apply_box_y(u, g, pl).array() * elf.array()).matrix();
  const NodeFields nf = conjugated_fields(u, wf, elf, lambda, g, pl);
  GradientBundle gb{nf.ut, nf.Dru, nf.ang};
  const Mat S = eval_S_multiplier(nf.u, gb, wf, g);
  const Eigen::ArrayXd y = g.radial.y.array(), r = g.radial.r.array();
  const Mat v2 = nf.u.array().square().matrix();

  rep.lhs = shell(Lv.array().square().matrix(), g, tr) / (4.0 * lambda);
  const double first =
      0.5 * c * shell((nf.ut.array().square() + nf.ang.array() + nf.Dru.array().square()).matrix(),
                      g, tr);
  const double lam2 =
      -0.5 * k * lambda * lambda * shell(v2 * y.pow(6.0 * k - 1.0).matrix().asDiagonal(), g, tr);

  double flux_f = 0, flux_S = 0, flux_A0 = 0, flux_w = 0, flux_hardy = 0, flux_c2 = 0;
  for (const auto& [rb, sgn] : {std::pair{1.0 - tr.epsilon, 1.0}, std::pair{tr.epsilon, -1.0}}) {
    const SideValues sv = side_values(nf, &S, g.radial, rb, sgn);
    const BoundaryTerms bt = boundary_terms(sv, g.time, pl);
    flux_f += bt.flux_f;
    flux_S += bt.flux_S;
    flux_w += bt.flux_w;
    flux_hardy += bt.flux_hardy;
    const double drf = std::pow(sv.yb, 2.0 * k);
    const Eigen::ArrayXd A0 =
        lambda * lambda * (std::pow(sv.yb, 4.0 * k) - 4.0 * c * c * g.time.t.array().square()) -
        8.0 * c * lambda;
    flux_A0 += sphere_time_integral((-0.5 * A0 * sgn * drf * sv.u.array().square()).matrix(),
                                    g.time, rb, n);
    flux_c2 += sphere_time_integral(
        (std::pow(sv.yb, 4.0 * k - 1.0) * (-sgn) * sv.u.array().square()).matrix(), g.time, rb, n);
  }
  double row_c1 = 0.0;
  if (n >= 4) {
    row_c1 = shell(v2 * (y.pow(2.0 * k - 2.0) / (r * r * r)).matrix().asDiagonal(), g, tr);
  } else if (n == 3) {
    row_c1 = shell(v2 * (y.pow(2.0 * k - 2.0) / (r * r)).matrix().asDiagonal(), g, tr);
  }
  rep.rhs = first + lam2 + flux_f + flux_S + flux_A0 + flux_w + flux_hardy;
  rep.terms = {{"first_order", first}, {"lambda2_bulk", lam2}, {"flux_f", flux_f},
               {"flux_S", flux_S},     {"flux_A0", flux_A0},   {"flux_w", flux_w},
               {"flux_hardy", flux_hardy}, {"row_c1_integral", row_c1},
               {"row_c2_integral", flux_c2}};
  rep.vacuous = (std::abs(rep.lhs) + std::abs(rep.rhs)) == 0.0;
  finish_inequality(rep, tol);
  return rep;
}

std::vector<IdentityReport> check_boundary_limits(const ModeField& u, const Params& p,
                                                  const std::vector<double>& eps_sequence,
                                                  const Grids& g, double tol) {
  validate(p);
  if (eps_sequence.size() < 3) throw ConfigError("check_boundary_limits: need >= 3 eps values");
  for (std::size_t i = 0; i + 1 < eps_sequence.size(); ++i) {
    if (!(eps_sequence[i + 1] < eps_sequence[i])) {
      throw ConfigError("check_boundary_limits: eps_sequence must be decreasing");
    }
  }
  const double k = p.kappa, lambda = p.lambda, c = p.c;
  const int n = p.n;
  const double beta = 1.0 + 2.0 * k;
  const WeightFields wf = eval_weight_bundle(p, g);
  const Mat elf = wf.f.unaryExpr([lambda](double fv) { return exp_clamped(lambda * fv); });
  const NodeFields nv = conjugated_fields(u, wf, elf, lambda, g, p);

  // u-level Neumann and super-Dirichlet quantities straight from u samples.
  const Mat U = u_from_h(u, g.radial, p);
  const Mat G = U * ypow(g.radial, -k).asDiagonal();
  const GhostLaw g_ghost = [ell = u.ell, k](double r) {
    return ((ell % 2 == 0) ? 1.0 : -1.0) * std::pow((1.0 + r) / (1.0 - r), -k);
  };
  const Mat Gr = build_radial_diff(g.radial, g_ghost).rows1(G);
  const Mat Ut = time_d1(U, g.time);

  const Vec N = neumann_trace(u, g.radial, p);
  const Eigen::ArrayXd tf =
      g.time.t.array().square().unaryExpr([&](double t2) { return exp_clamped(-2.0 * lambda * c * t2); });
  const double target2 = g.time.w.dot((tf * N.array().square()).matrix()) * sphere_area(n);
  const double normN2 = g.time.w.dot(N.array().square().matrix()) * sphere_area(n);

  std::vector<double> q1, q2, q3, qn, sd1, sd2;
  for (double eps : eps_sequence) {
    const double rb = 1.0 - eps, yb = eps;
    // Strip the known radial factor e^{-2 lambda y^beta / beta}; what remains is
    // a regular expansion in eps^beta and eps.
    const double strip = std::exp(2.0 * lambda * std::pow(yb, beta) / beta);
    const Probe pr = make_probe(g.radial, rb);
    const Vec vt = pr.column(nv.ut), vD = pr.column(nv.Dru), vv = pr.column(nv.u);
    q1.push_back(strip * sphere_time_integral((std::pow(yb, 2 * k) * vt.array().square()).matrix(), g.time, rb, n));
    q2.push_back(strip * sphere_time_integral((std::pow(yb, 2 * k) * vD.array().square()).matrix(), g.time, rb, n));
    q3.push_back(strip * sphere_time_integral((std::pow(yb, 2 * k - 2) * vv.array().square()).matrix(), g.time, rb, n));
    const Vec ub = pr.column(U), gr = pr.column(Gr), utb = pr.column(Ut);
    const Eigen::ArrayXd Neps = std::pow(yb, 2 * k) * gr.array();
    qn.push_back(sphere_time_integral(Neps.square().matrix(), g.time, rb, n));
    const Eigen::ArrayXd s1 = (1.0 - 2.0 * k) * std::pow(yb, k - 1.0) * ub.array() + Neps;
    sd1.push_back(std::sqrt(sphere_time_integral(s1.square().matrix(), g.time, rb, n)));
    const Eigen::ArrayXd s2 = std::pow(yb, k) * utb.array();
    sd2.push_back(std::sqrt(sphere_time_integral(s2.square().matrix(), g.time, rb, n)));
  }

  // Once the radial weight is stripped, only the D_r term carries powers of eps^beta.
  const std::size_t free_terms = std::min<std::size_t>(3, eps_sequence.size() - 1);
  const std::vector<double> mixed_basis =
      expansion_exponents(lambda > 0.0 ? beta : 0.0, free_terms);
  const std::vector<double> integer_basis = expansion_exponents(0.0, free_terms);

  auto make = [&](const std::string& name, double extrap, double target, double scale) {
    IdentityReport rep;
    rep.name = name;
    rep.lhs = extrap;
    rep.rhs = target;
    rep.residual = std::abs(extrap - target);
    rep.relative_residual = rep.residual / std::max(scale, kScaleFloor);
    rep.slack = extrap - target;
    rep.pass = std::isfinite(rep.relative_residual) && rep.relative_residual <= tol;
    rep.vacuous = scale == 0.0;
    return rep;
  };
  const double sN = std::sqrt(normN2);
  std::vector<IdentityReport> out;
  out.push_back(make("limit_dt", extrapolate_to_zero(eps_sequence, q1, integer_basis), 0.0, target2));
  out.push_back(make("limit_Dr", extrapolate_to_zero(eps_sequence, q2, mixed_basis), target2, target2));
  const double t3 = target2 / ((1.0 - 2.0 * k) * (1.0 - 2.0 * k));
  out.push_back(make("limit_weighted_L2", extrapolate_to_zero(eps_sequence, q3, integer_basis), t3, t3));
  out.push_back(make("neumann_trace", extrapolate_to_zero(eps_sequence, qn, integer_basis), normN2, normN2));
  out.push_back(make("super_dirichlet_trace", extrapolate_to_zero(eps_sequence, sd1, integer_basis), 0.0, sN));
  out.push_back(make("super_dirichlet_dt", extrapolate_to_zero(eps_sequence, sd2, integer_basis), 0.0, sN));
  return out;
}

namespace {

// Product-quadrature integral over the time rows with weights tw.
// Power of y seen in the largest boundary row of h at the outer three nodes;
// 0 when there is no boundary signal or the slope is within noise of 0.
double edge_growth_exponent(const Mat& h, const RadialGrid& rg) {
  const Index N = rg.size();
  if (N < 3 || h.rows() == 0) return 0.0;
  Index row = 0;
  h.col(N - 1).cwiseAbs().maxCoeff(&row);
  const double scale = h.cwiseAbs().maxCoeff();
  if (!(std::abs(h(row, N - 1)) > 1e-8 * scale)) return 0.0;
  const double a0 = std::abs(h(row, N - 3)), a2 = std::abs(h(row, N - 1));
  if (!(a0 > 0.0)) return 0.0;
  const double slope = std::log(a2 / a0) / std::log(rg.y(N - 1) / rg.y(N - 3));
  return (slope < -0.05) ? slope : 0.0;
}

double weighted_integral(const Mat& P, const WeightedRule& rule, const Vec& tw) {
  return tw.dot(P * rule.w);
}

}  // namespace

IdentityReport check_integrated_hardy(const ModeField& u, double t0, double t1, const Grids& g,
                                      const Params& p) {
  validate(p);
  if (!(t0 < t1)) throw ConfigError("check_integrated_hardy: empty time window");
  const double k = p.kappa;
  const int n = p.n;
  Vec tw = g.time.w;
  Index count = 0;
  for (Index i = 0; i < g.time.size(); ++i) {
    if (g.time.t(i) < t0 - 1e-12 || g.time.t(i) > t1 + 1e-12) {
      tw(i) = 0.0;
    } else {
      ++count;
    }
  }
  if (count < 2) throw ConfigError("check_integrated_hardy: empty time window");

  const RadialDiff D = build_radial_diff(g.radial, h_ghost(u.ell, k));
  const Mat hr = D.rows1(u.h);
  const Mat h2 = u.h.array().square().matrix();
  const Mat PD = ((hr * g.radial.y.asDiagonal()) - (1.0 - 2.0 * k) * u.h).array().square().matrix();

  const WeightedRule wy = product_weights(g.radial, [k](double y) { return std::pow(y, -2.0 * k); }, -2.0 * k);
  const WeightedRule wr = product_weights(
      g.radial, [k](double y) { return std::pow(y, 2.0 - 2.0 * k) / ((1.0 - y) * (1.0 - y)); },
      2.0 - 2.0 * k);

  IdentityReport rep;
  rep.name = "integrated_hardy";
  const double sing_y = weighted_integral(h2, wy, tw);
  const double sing_r = (n - 1) * weighted_integral(h2, wr, tw);
  const double grad = weighted_integral(PD, wy, tw);
  const double C_H = (n == 1) ? 8.0 / ((1.0 - 2.0 * k) * (1.0 - 2.0 * k))
                              : std::max(8.0 / ((1.0 - 2.0 * k) * (1.0 - 2.0 * k)), 9.0);
  rep.lhs = sing_y + sing_r;
  rep.rhs = grad;
  rep.terms = {{"y_term", sing_y}, {"r_term", sing_r}, {"grad", grad}, {"C_H", C_H}};
  if (grad == 0.0 && rep.lhs == 0.0) {
    rep.vacuous = true;
    rep.pass = true;
    rep.terms.emplace_back("ratio", 0.0);
    return rep;
  }
  const double ratio = rep.lhs / grad;
  rep.terms.emplace_back("ratio", ratio);
  rep.slack = 1.1 * C_H - ratio;
  rep.pass = std::isfinite(ratio) && ratio <= 1.1 * C_H;
  return rep;
}

IdentityReport check_carleman(const ModeField& u, double lambda, const Params& p, const Grids& g) {
  Params pc = p;
  pc.carleman_admissible = true;
  validate(pc);
  const double k = p.kappa, c = p.c;
  const int n = p.n;
  const double beta = 1.0 + 2.0 * k;
  const double mu = angular_eigenvalue(u.ell, n);
  const RadialGrid& rg = g.radial;
  const Eigen::ArrayXd y = rg.y.array(), r = rg.r.array();

  const RadialDiff D = build_radial_diff(rg, h_ghost(u.ell, k));
  const Mat hr = D.rows1(u.h), hrr = D.rows2(u.h);
  const Mat ht = time_d1(u.h, g.time), htt = time_d2(u.h, g.time);
  // y * bracket of Box_kappa in the h-representation: smooth up to y = 0.
  const Vec a_hr = (-2.0 * (1.0 - k) + (n - 1) * y / r).matrix();
  const Vec a_h = (-(1.0 - k) * (n - 1) / r - mu * y / (r * r)).matrix();
  const Mat Q = (-htt + hrr) * rg.y.asDiagonal() + hr * a_hr.asDiagonal() + u.h * a_h.asDiagonal();
  const Mat PD = ((hr * rg.y.asDiagonal()) - (1.0 - 2.0 * k) * u.h).array().square().matrix();
  const Mat h2 = u.h.array().square().matrix();

  auto E = [lambda, beta](double yy) { return exp_clamped(-2.0 * lambda * std::pow(yy, beta) / beta); };
  const WeightedRule w_box = product_weights(rg, [&](double yy) { return E(yy) * std::pow(yy, -2.0 * k); }, -2.0 * k);
  const WeightedRule w_t = product_weights(rg, [&](double yy) { return E(yy) * std::pow(yy, 2.0 - 2.0 * k); }, 2.0 - 2.0 * k);
  const WeightedRule w_ang = product_weights(
      rg, [&](double yy) { return E(yy) * std::pow(yy, 2.0 - 2.0 * k) / ((1.0 - yy) * (1.0 - yy)); },
      2.0 - 2.0 * k);
  const WeightedRule w_3 = product_weights(rg, [&](double yy) { return E(yy) * std::pow(yy, 4.0 * k + 1.0); }, 4.0 * k + 1.0);
  const int rpow = (n >= 4) ? 3 : 2;
  const WeightedRule w_x = product_weights(rg, [&](double yy) { return E(yy) / std::pow(1.0 - yy, rpow); }, 0.0);

  const Vec tf = g.time.t.unaryExpr([&](double t) { return exp_clamped(-2.0 * lambda * c * t * t); });
  const Vec tw = (g.time.w.array() * tf.array()).matrix();

  IdentityReport rep;
  rep.name = "carleman";
  rep.divergent = w_box.divergent || w_t.divergent || w_ang.divergent || w_3.divergent || w_x.divergent;
  // The rules assume h bounded at y = 0. Data growing like y^a (a < 0) make
  // the Box integrand behave like y^{2a - 2 - 2k} and the lambda^3 one like y^{2a + 4k + 1}.
  const double a = edge_growth_exponent(u.h, rg);
  if (a < 0.0) {
    const double worst = std::min(2.0 * a - 2.0 - 2.0 * k, 2.0 * a + 4.0 * k + 1.0);
    if (worst <= kDivergenceThreshold) rep.divergent = true;
  }
  const Vec N = neumann_trace(u, rg, p);
  const double I_gamma = tw.dot(N.array().square().matrix()) * sphere_area(n);
  const double I_box = weighted_integral(Q.array().square().matrix(), w_box, tw);
  const double I_t = weighted_integral(ht.array().square().matrix(), w_t, tw);
  const double I_D = weighted_integral(PD, w_box, tw);
  const double I_ang = (mu > 0.0) ? mu * weighted_integral(h2, w_ang, tw) : 0.0;
  const double I_3 = weighted_integral(h2, w_3, tw);
  const double I_x = (n == 1) ? 0.0 : weighted_integral(h2, w_x, tw);
  const double lam3 = lambda * lambda * lambda;

  rep.lhs = lambda * I_gamma + I_box;
  rep.rhs = lambda * (I_t + I_ang + I_D) + lam3 * I_3 + lambda * I_x;
  rep.terms = {{"lambda", lambda},       {"boundary", I_gamma}, {"box_sq", I_box},
               {"dt_sq", I_t},           {"angular_sq", I_ang}, {"Dr_sq", I_D},
               {"weighted_u2", I_3},     {"extra_u2", I_x},     {"lambda3_coefficient", lam3}};
  if (rep.divergent) {
    rep.pass = false;
    rep.terms.emplace_back("C0", kNaN);
    return rep;
  }
  if (rep.rhs == 0.0) {
    rep.vacuous = true;
    rep.pass = false;
    rep.terms.emplace_back("C0", kNaN);
    return rep;
  }
  const double C0 = rep.lhs / rep.rhs;
  rep.terms.emplace_back("C0", C0);
  rep.slack = C0;
  rep.pass = std::isfinite(C0) && C0 > 0.0;
  return rep;
}

}  // namespace swl
