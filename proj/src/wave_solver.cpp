#include "swl/wave_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace swl {

namespace {

double eval_or_zero(const SpaceTimeFn& f, double t, double r) { return f ? f(t, r) : 0.0; }

// Gauss quadrature of g over [a, b].
template <class F>
double gauss(F&& g, double a, double b) {
  if (b <= a) return 0.0;
  const GaussRule& gl = gauss_legendre_rule();
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  double s = 0.0;
  for (std::size_t i = 0; i < gl.x.size(); ++i) s += gl.w[i] * g(mid + half * gl.x[i]);
  return half * s;
}

// Two Gauss panels, the outer one geometrically thinner, for cells that touch r = 1.
template <class F>
double gauss_cell(F&& g, double a, double b) {
  if (b < 1.0) return gauss(g, a, b);
  const double m = 1.0 - 0.1 * (1.0 - a);
  return gauss(g, a, m) + gauss(g, m, b);
}

}  // namespace

void validate(EquationSpec& spec, const RadialGrid& grid, const Params& p, double t0, double t1) {
  validate(p);
  const int n = p.n;
  const int samples = spec.time_dependent ? 33 : 1;
  double xs = 0.0, cv = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double t = (samples == 1) ? t0 : t0 + (t1 - t0) * s / (samples - 1.0);
    for (Index j = 0; j < grid.size(); ++j) {
      const double r = grid.r(j), y = grid.y(j);
      const double xt = eval_or_zero(spec.X_t, t, r), xr = eval_or_zero(spec.X_r, t, r);
      const double v = eval_or_zero(spec.V, t, r);
      if (!std::isfinite(xt) || !std::isfinite(xr) || !std::isfinite(v)) {
        throw ConfigError("equation spec: non-finite X or V on the grid");
      }
      xs = std::max(xs, std::hypot(xt, xr));
      cv = std::max(cv, std::abs(v) / (1.0 / y + (n - 1) / r));
    }
  }
  if (xs > 1e6) throw ConfigError("equation spec: X is not bounded on the grid");
  if (cv > spec.C_V_max) {
    throw ConfigError("equation spec: |V| exceeds C_V (1/y + (n-1)/r) with C_V = " +
                      std::to_string(spec.C_V_max));
  }
  spec.X_sup = xs;
  spec.C_V = cv;
}

EquationSpec demo_equation() {
  EquationSpec s;
  s.X_t = [](double, double) { return 0.1; };
  s.X_r = [](double, double r) { return 0.05 * std::sin(r); };
  s.V = [](double, double r) { return 0.2 * std::min(1.0 / (1.0 - r), 1.0 / r); };
  return s;
}

EquationSpec twisted_equation(const Params& p) {
  EquationSpec s;
  if (p.n > 1) {
    const double a = -(p.n - 1) * p.kappa;
    s.V = [a](double, double r) { return a / (r * (1.0 - r)); };
  }
  return s;
}

double default_dt(const RadialGrid& grid, double cfl) {
  const Index N = grid.size();
  double h = 1.0 - grid.r(N - 1);
  for (Index j = 0; j + 1 < N; ++j) h = std::min(h, grid.r(j + 1) - grid.r(j));
  return cfl * h;
}

ModeOperator assemble_mode_operator(int ell, const EquationSpec& spec, const Params& p,
                                    const RadialGrid& grid) {
  validate(p);
  if (ell < 0 || (p.n == 1 && ell > 1)) throw ConfigError("assemble_mode_operator: invalid mode");
  if (grid.n != p.n) throw ConfigError("assemble_mode_operator: grid built for another n");
  const double k = p.kappa;
  const int n = p.n;
  const Index N = grid.size();

  ModeOperator op;
  op.ell = ell;
  op.mu = angular_eigenvalue(ell, n);
  op.params = p;
  op.grid = grid;
  op.r = grid.r;
  op.y = grid.y;
  op.spec = spec;
  op.time_dependent = spec.time_dependent;
  op.has_lower_order = static_cast<bool>(spec.X_t) || static_cast<bool>(spec.X_r) ||
                       static_cast<bool>(spec.V);

  auto rho = [n, k](double r) { return std::pow(r, n - 1) * std::pow(1.0 - r, 2.0 - 2.0 * k); };
  auto q = [n, k, mu = op.mu](double r) {
    return (1.0 - k) * (n - 1) / (r * (1.0 - r)) + mu / (r * r);
  };
  const bool odd_line = (n == 1 && ell == 1);

  op.mass.resize(N);
  op.diag.resize(N);
  op.face.resize(N - 1);
  op.xt = Vec::Zero(N);
  op.xr = Vec::Zero(N);
  op.pot = Vec::Zero(N);
  for (Index j = 0; j < N; ++j) {
    const double a = (j == 0) ? (odd_line ? 0.5 * grid.r(0) : 0.0) : 0.5 * (grid.r(j - 1) + grid.r(j));
    const double b = (j == N - 1) ? 1.0 : 0.5 * (grid.r(j) + grid.r(j + 1));
    op.mass(j) = gauss_cell(rho, a, b);
    op.diag(j) = -gauss_cell([&](double r) { return q(r) * rho(r); }, a, b);
    if (op.has_lower_order && !op.time_dependent) {
      op.xt(j) = gauss_cell([&](double r) { return rho(r) * eval_or_zero(spec.X_t, 0.0, r); }, a, b) / op.mass(j);
      op.xr(j) = gauss_cell([&](double r) { return rho(r) * eval_or_zero(spec.X_r, 0.0, r); }, a, b) / op.mass(j);
      op.pot(j) = gauss_cell([&](double r) {
                    return rho(r) * (eval_or_zero(spec.X_r, 0.0, r) * (1.0 - 2.0 * k) / (1.0 - r) -
                                     eval_or_zero(spec.V, 0.0, r));
                  }, a, b) / op.mass(j);
    }
  }
  for (Index j = 0; j + 1 < N; ++j) {
    op.face(j) = rho(0.5 * (grid.r(j) + grid.r(j + 1))) / (grid.r(j + 1) - grid.r(j));
  }
  if (n == 1 && ell == 0) {
    // u even and smooth at 0 gives h_r(0+) = (1-k) h(0): outgoing flux at r = 0.
    op.diag(0) -= (1.0 - k);
  } else if (odd_line) {
    // h(0) = 0 imposed through the face at r_0 / 2.
    op.diag(0) -= rho(0.5 * grid.r(0)) / grid.r(0);
  }

  // Nodal three-point first derivative for the X_r h_r term.
  op.d1.resize(N, 3);
  op.d1_first.resize(N);
  for (Index j = 0; j < N; ++j) {
    const Index first = std::clamp<Index>(j - 1, 0, N - 3);
    const std::vector<double> xs{grid.r(first), grid.r(first + 1), grid.r(first + 2)};
    const Eigen::MatrixXd w = fd_weights(grid.r(j), xs, 1);
    op.d1.row(j) = w.row(1);
    op.d1_first[j] = first;
  }
  const Eigen::MatrixXd cw = fd_weights(1.0, {1.0, grid.r(N - 1), grid.r(N - 2)}, 1);
  for (int i = 0; i < 3; ++i) op.closure_w[i] = cw(1, i);
  return op;
}

Mat ModeOperator::apply(const Mat& H, double t) const {
  const Index N = mass.size();
  Mat out(N, H.cols());
  // Flux differences.
  for (Index j = 0; j < N; ++j) out.row(j) = diag(j) * H.row(j);
  for (Index j = 0; j + 1 < N; ++j) {
    const Eigen::RowVectorXd F = face(j) * (H.row(j + 1) - H.row(j));
    out.row(j) += F;
    out.row(j + 1) -= F;
  }
  out = mass.cwiseInverse().asDiagonal() * out;
  if (!has_lower_order) return out;

  const double k = params.kappa;
  Vec xr_t = xr, pot_t = pot;
  if (time_dependent) {
    for (Index j = 0; j < N; ++j) {
      const double xrv = eval_or_zero(spec.X_r, t, r(j));
      xr_t(j) = xrv;
      pot_t(j) = xrv * (1.0 - 2.0 * k) / y(j) - eval_or_zero(spec.V, t, r(j));
    }
  }
  out += pot_t.asDiagonal() * H;
  for (Index j = 0; j < N; ++j) {
    if (xr_t(j) == 0.0) continue;
    const Index f = d1_first[j];
    out.row(j) -= xr_t(j) * (d1(j, 0) * H.row(f) + d1(j, 1) * H.row(f + 1) + d1(j, 2) * H.row(f + 2));
  }
  return out;
}

Vec ModeOperator::damping(double t) const {
  if (!time_dependent) return xt;
  Vec out(r.size());
  for (Index j = 0; j < r.size(); ++j) out(j) = eval_or_zero(spec.X_t, t, r(j));
  return out;
}

double ModeOperator::closure_beta(double t) const {
  const double k = params.kappa;
  const int n = params.n;
  double cs = -(1.0 - k) * (n - 1);
  {
    const double yb = 1e-9;
    cs += eval_or_zero(spec.X_r, t, 1.0) * (1.0 - 2.0 * k) - yb * eval_or_zero(spec.V, t, 1.0 - yb);
  }
  return cs / (2.0 * (1.0 - k));
}

Eigen::RowVectorXd ModeOperator::boundary_values(const Mat& H, double t) const {
  const Index N = H.rows();
  const double beta = closure_beta(t);
  return (closure_w[1] * H.row(N - 1) + closure_w[2] * H.row(N - 2)) / (beta - closure_w[0]);
}

double ModeOperator::spectral_radius() const {
  const Index N = mass.size();
  // M^{-1/2} K M^{-1/2} is symmetric; iterate on it.
  const Vec s = mass.cwiseSqrt().cwiseInverse();
  Vec v = Vec::Ones(N);
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < 500; ++it) {
    Vec x = s.cwiseProduct(v);
    Vec Kx = diag.cwiseProduct(x);
    for (Index j = 0; j + 1 < N; ++j) {
      const double F = face(j) * (x(j + 1) - x(j));
      Kx(j) += F;
      Kx(j + 1) -= F;
    }
    Vec w = -s.cwiseProduct(Kx);
    const double nl = w.norm();
    if (nl == 0.0) return 0.0;
    const double next = v.dot(w);
    v = w / nl;
    if (it > 20 && std::abs(next - lam) <= 1e-6 * std::abs(next)) return next;
    lam = next;
  }
  return lam;
}

namespace {

struct Stepper {
  const ModeOperator& op;
  const SolveOptions& opt;
  double dt;

  Mat accel(const Mat& H, const Mat& Ht, double t) const {
    Mat a = op.apply(H, t);
    if (op.has_lower_order) a -= op.damping(t).asDiagonal() * Ht;
    if (op.spec.forcing) {
      for (Index j = 0; j < H.rows(); ++j) a.row(j).array() += op.spec.forcing(t, op.r(j));
    }
    return a;
  }
};

void check_finite(const Mat& H, double t) {
  if (!H.allFinite()) {
    throw SolverError("non-finite state at t = " + std::to_string(t));
  }
}

// Core loop shared by solve_ivp and evolve_batch. `record` sees (level, t, H,
// Ht, Htt) for every level 0..steps.
template <class Record>
std::pair<Mat, Mat> run(const ModeOperator& op, const Mat& H0, const Mat& Ht0, double t0,
                        double t1, const SolveOptions& opt, double& dt_used, Record&& record) {
  if (H0.rows() != op.mass.size() || Ht0.rows() != op.mass.size() || H0.cols() != Ht0.cols()) {
    throw ConfigError("solve: initial data shape does not match the operator");
  }
  if (!H0.allFinite() || !Ht0.allFinite()) throw ConfigError("solve: non-finite initial data");
  if (!(opt.cfl > 0.0)) throw ConfigError("solve: CFL ratio must be positive");
  RadialGrid g;
  g.r = op.r;
  const double limit = default_dt(g, opt.cfl);
  double dt = (opt.dt > 0.0) ? opt.dt : limit;
  if (dt > limit * (1.0 + 1e-12)) {
    throw ConfigError("solve: CFL violation, dt exceeds cfl * min spacing");
  }
  const double span = t1 - t0;
  const long steps = std::max<long>(1, static_cast<long>(std::ceil(std::abs(span) / dt - 1e-9)));
  dt = span / static_cast<double>(steps);  // signed
  dt_used = std::abs(dt);
  const Stepper st{op, opt, dt};

  if (opt.scheme == Scheme::RK4) {
    Mat H = H0, Ht = Ht0;
    for (long s = 0; s <= steps; ++s) {
      const double t = t0 + s * dt;
      const Mat A = st.accel(H, Ht, t);
      record(s, t, H, Ht, A);
      if (opt.observer) opt.observer(t, H);
      if (s == steps) break;
      const Mat k1h = Ht, k1v = A;
      const Mat k2h = Ht + 0.5 * dt * k1v, k2v = st.accel(H + 0.5 * dt * k1h, k2h, t + 0.5 * dt);
      const Mat k3h = Ht + 0.5 * dt * k2v, k3v = st.accel(H + 0.5 * dt * k2h, k3h, t + 0.5 * dt);
      const Mat k4h = Ht + dt * k3v, k4v = st.accel(H + dt * k3h, k4h, t + dt);
      H += dt / 6.0 * (k1h + 2.0 * k2h + 2.0 * k3h + k4h);
      Ht += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
      if (s % 1000 == 0) check_finite(H, t + dt);
    }
    check_finite(H, t1);
    return {H, Ht};
  }

  // Leapfrog; the damping X_t h_t is averaged over levels k-1 and k+1.
  Mat Hprev = H0;
  Mat A0 = st.accel(H0, Ht0, t0);
  Mat H = H0 + dt * Ht0 + 0.5 * dt * dt * A0;
  Mat Hnext(H.rows(), H.cols());
  record(0, t0, H0, Ht0, A0);
  if (opt.observer) opt.observer(t0, H0);
  for (long s = 1; s <= steps; ++s) {
    const double t = t0 + s * dt;
    Mat rhs = 2.0 * H - Hprev + dt * dt * op.apply(H, t);
    if (op.spec.forcing) {
      for (Index j = 0; j < H.rows(); ++j) rhs.row(j).array() += dt * dt * op.spec.forcing(t, op.r(j));
    }
    if (op.has_lower_order) {
      const Vec half = 0.5 * dt * op.damping(t);
      rhs += half.asDiagonal() * Hprev;
      Hnext = (1.0 + half.array()).inverse().matrix().asDiagonal() * rhs;
    } else {
      Hnext = std::move(rhs);
    }
    const Mat Ht = (Hnext - Hprev) / (2.0 * dt);
    const Mat Htt = (Hnext - 2.0 * H + Hprev) / (dt * dt);
    record(s, t, H, Ht, Htt);
    if (opt.observer) opt.observer(t, H);
    if (s % 1000 == 0 || s == steps) check_finite(H, t);
    if (s == steps) return {H, Ht};
    Hprev = std::move(H);
    H = std::move(Hnext);
    Hnext.resize(H.rows(), H.cols());
  }
  return {H0, Ht0};
}

}  // namespace

Trajectory solve_ivp(const ModeOperator& op, const Vec& h0, const Vec& ht0, double t0, double t1,
                     const SolveOptions& opt) {
  Trajectory tr;
  tr.ell = op.ell;
  tr.params = op.params;
  tr.grid = op.grid;
  tr.scheme = (opt.scheme == Scheme::RK4) ? "rk4" : "leapfrog";
  tr.cfl = opt.cfl;

  RadialGrid g;
  g.r = op.r;
  const double dt_guess = (opt.dt > 0.0) ? opt.dt : default_dt(g, opt.cfl);
  const long steps_guess = std::max<long>(1, static_cast<long>(std::ceil(std::abs(t1 - t0) / dt_guess - 1e-9)));
  const long stride = (opt.snapshot_stride > 0) ? opt.snapshot_stride : std::max<long>(1, steps_guess / 200);
  const long n_snap = steps_guess / stride + 1 + ((steps_guess % stride) ? 1 : 0);
  const Index N = op.mass.size();
  tr.t.resize(n_snap);
  tr.h.resize(n_snap, N);
  tr.ht.resize(n_snap, N);
  tr.htt.resize(n_snap, N);
  tr.h_boundary.resize(n_snap);
  long filled = 0;
  double dt_used = 0.0;
  auto record = [&](long s, double t, const Mat& H, const Mat& Ht, const Mat& Htt) {
    if (s % stride != 0 && s != steps_guess) return;
    tr.t(filled) = t;
    tr.h.row(filled) = H.col(0).transpose();
    tr.ht.row(filled) = Ht.col(0).transpose();
    tr.htt.row(filled) = Htt.col(0).transpose();
    tr.h_boundary(filled) = op.boundary_values(H, t)(0);
    ++filled;
  };
  run(op, h0, ht0, t0, t1, opt, dt_used, record);
  tr.dt = dt_used;
  tr.t.conservativeResize(filled);
  tr.h.conservativeResize(filled, N);
  tr.ht.conservativeResize(filled, N);
  tr.htt.conservativeResize(filled, N);
  tr.h_boundary.conservativeResize(filled);
  return tr;
}

std::pair<Mat, Mat> evolve_batch(const ModeOperator& op, const Mat& H0, const Mat& Ht0, double t0,
                                 double t1, const SolveOptions& opt) {
  double dt_used = 0.0;
  return run(op, H0, Ht0, t0, t1, opt, dt_used, [](long, double, const Mat&, const Mat&, const Mat&) {});
}

EnergyRecord energies(const Trajectory& traj) {
  const Params& p = traj.params;
  const double k = p.kappa;
  const int n = p.n;
  const RadialGrid& grid = traj.grid;
  const Index S = traj.t.size();
  const double mu = angular_eigenvalue(traj.ell, n);
  const RadialDiff D = build_radial_diff(grid, h_ghost(traj.ell, k));

  // Every density is y^s r^{-m} times smooth nodal data in h; integrate with
  // product weights so that the boundary power is exact.
  auto rule = [&](double s, int m) {
    return product_weights(
        grid, [s, m](double yy) { return std::pow(yy, s) / std::pow(1.0 - yy, m); }, s).w;
  };
  const Vec W_u = rule(2.0 - 2.0 * k, 0);   // u^2 = y^{2-2k} h^2
  const Vec W_D = rule(-2.0 * k, 0);        // (D_r u)^2 = y^{-2k} P^2
  const Vec W_ua = (mu > 0.0) ? rule(2.0 - 2.0 * k, 2) : Vec::Zero(grid.size());
  const Vec W_Da = (mu > 0.0) ? rule(-2.0 * k, 2) : Vec::Zero(grid.size());
  const Vec W_uaa = (mu > 0.0) ? rule(2.0 - 2.0 * k, 4) : Vec::Zero(grid.size());
  const Vec W_ry = (n >= 3) ? rule(1.0 - 2.0 * k, 1) : Vec::Zero(grid.size());
  const Eigen::ArrayXd y = grid.y.array();

  EnergyRecord rec;
  rec.t = traj.t;
  rec.E1.resize(S);
  rec.E2.resize(S);
  rec.E_conserved.resize(S);
  rec.E_kappa.resize(S);
  const Probe origin = make_probe(grid, 0.0);
  for (Index s = 0; s < S; ++s) {
    const Vec h = traj.h.row(s).transpose();
    const Vec ht = traj.ht.row(s).transpose();
    const Vec htt = traj.htt.row(s).transpose();
    const Vec hr = D.apply1(h), htr = D.apply1(ht);
    // y^k D_r u = y h_r - (1-2k) h, smooth up to y = 0; Dbar_r D_r u = y^{-k} d_r of it.
    const Vec P = (y * hr.array() - (1.0 - 2.0 * k) * h.array()).matrix();
    const Vec Pt = (y * htr.array() - (1.0 - 2.0 * k) * ht.array()).matrix();
    const Vec Pr = D.apply1(P);
    auto sq = [](const Vec& v) { return Vec(v.array().square()); };

    const double e_u = W_u.dot(sq(h)), e_t = W_u.dot(sq(ht)), e_D = W_D.dot(sq(P));
    const double e_a = mu * W_ua.dot(sq(h));
    rec.E_conserved(s) = e_t + e_D + e_a;
    rec.E1(s) = rec.E_conserved(s) + e_u;
    double hk = rec.E_conserved(s);
    if (n >= 3) {
      hk += k * (n - 1) * W_ry.dot(sq(h));
    } else if (traj.ell == 0) {
      // Kink of y = 1 - |x| at the origin; u(0) = h(0) by extrapolation.
      const double u0 = origin.at(h);
      hk += 2.0 * k * u0 * u0;
    }
    rec.E_kappa(s) = hk;
    // E1 of u_t, of D_r u (first derivative through Dbar_r) and of the angular
    // component, the latter with |Delta_S u|^2 = mu^2 u^2 / r^4.
    const double E1_ut = W_u.dot(sq(htt)) + W_D.dot(sq(Pt)) + mu * W_ua.dot(sq(ht)) + e_t;
    const double E1_Dru = W_D.dot(sq(Pt)) + W_u.dot(sq(Pr)) + mu * W_Da.dot(sq(P)) + e_D;
    const double E1_ang = mu * (W_ua.dot(sq(ht)) + W_Da.dot(sq(P)) + mu * W_uaa.dot(sq(h)) +
                                W_ua.dot(sq(h)));
    rec.E2(s) = E1_ut + E1_Dru + E1_ang + rec.E1(s);
  }
  return rec;
}

Mat e1_gram(int ell, const Params& p, const RadialGrid& grid, const Mat& H, const Mat& Ht) {
  const double k = p.kappa;
  const double mu = angular_eigenvalue(ell, p.n);
  const RadialDiff D = build_radial_diff(grid, h_ghost(ell, k));
  auto rule = [&](double s, int m) {
    return product_weights(
        grid, [s, m](double yy) { return std::pow(yy, s) / std::pow(1.0 - yy, m); }, s).w;
  };
  const Vec W_u = rule(2.0 - 2.0 * k, 0);
  const Vec W_D = rule(-2.0 * k, 0);
  Mat P(H.rows(), H.cols());
  for (Index c = 0; c < H.cols(); ++c) {
    P.col(c) = (grid.y.array() * D.apply1(H.col(c)).array() - (1.0 - 2.0 * k) * H.col(c).array()).matrix();
  }
  Mat G = Ht.transpose() * W_u.asDiagonal() * Ht + P.transpose() * W_D.asDiagonal() * P +
          H.transpose() * W_u.asDiagonal() * H;
  if (mu > 0.0) G += mu * H.transpose() * rule(2.0 - 2.0 * k, 2).asDiagonal() * H;
  return 0.5 * (G + G.transpose());
}

TraceData extract_traces(const Trajectory& traj) {
  TraceData td;
  td.t = traj.t;
  td.neumann = -(1.0 - 2.0 * traj.params.kappa) * traj.h_boundary;
  td.dirichlet = Vec::Zero(traj.t.size());
  return td;
}

GronwallFit gronwall_fit(const Vec& t, const Vec& energy, double tolerance) {
  if (t.size() != energy.size() || t.size() < 2) throw ConfigError("gronwall_fit: need >= 2 samples");
  if (!(energy.array() > 0.0).all()) throw ConfigError("zero energy window");
  GronwallFit fit;
  fit.M = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < t.size(); ++i) {
    for (Index j = 0; j < t.size(); ++j) {
      if (t(j) == t(i)) continue;
      // Growth forward in time: later over earlier.
      const Index a = (t(i) < t(j)) ? i : j, b = (t(i) < t(j)) ? j : i;
      fit.M = std::max(fit.M, std::log(energy(b) / energy(a)) / (t(b) - t(a)));
    }
  }
  fit.M = std::max(fit.M, 0.0);
  fit.pass = std::isfinite(fit.M) && fit.M <= tolerance;
  return fit;
}

}  // namespace swl
