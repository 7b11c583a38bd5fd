#include <doctest.h>

#include "swl/wave_solver.hpp"

#include <cmath>

using namespace swl;

namespace {

Params params(int n, double k = -0.25) {
  Params p;
  p.n = n;
  p.kappa = k;
  return p;
}

Vec gaussian(const RadialGrid& g, double centre, double width, int ell = 0) {
  return g.r.unaryExpr([=](double r) {
    return std::pow(r, ell) * std::exp(-(r - centre) * (r - centre) / width);
  });
}

double drift(const Vec& E) { return (E.array() - E(0)).abs().maxCoeff() / E(0); }

}  // namespace

TEST_CASE("equation spec validation") {
  const Params p = params(3);
  const RadialGrid g = build_radial_grid(64, 2.0, 3);
  EquationSpec ok = demo_equation();
  CHECK_NOTHROW(validate(ok, g, p, 0.0, 1.0));
  CHECK(ok.X_sup == doctest::Approx(0.1).epsilon(0.01));

  EquationSpec big;
  big.V = [](double, double r) { return 1e5 / (1.0 - r); };
  CHECK_THROWS_AS(validate(big, g, p, 0.0, 1.0), ConfigError);
  EquationSpec wild;
  wild.X_r = [](double, double r) { return 1.0 / (1.0 - r) / (1.0 - r) / (1.0 - r) / (1.0 - r); };
  CHECK_THROWS_AS(validate(wild, g, p, 0.0, 1.0), ConfigError);
}

TEST_CASE("mode operator guards") {
  const RadialGrid g = build_radial_grid(32, 2.0, 1);
  CHECK_THROWS_AS(assemble_mode_operator(2, EquationSpec{}, params(1), g), ConfigError);
  CHECK_THROWS_AS(assemble_mode_operator(0, EquationSpec{}, params(3), g), ConfigError);
}

TEST_CASE("default step respects the spectral bound") {
  for (int n : {1, 3}) {
    const RadialGrid g = build_radial_grid(100, 2.0, n);
    const ModeOperator op = assemble_mode_operator(1, EquationSpec{}, params(n), g);
    CHECK(default_dt(g, 0.5) * std::sqrt(op.spectral_radius()) < 2.0);
  }
}

TEST_CASE("energy of the odd n = 1 mode is conserved") {
  const Params p = params(1);
  std::vector<double> drifts, growth;
  for (int N : {100, 200}) {
    const RadialGrid g = build_radial_grid(N, 2.0, 1);
    const ModeOperator op = assemble_mode_operator(1, EquationSpec{}, p, g);
    const Vec h0 = gaussian(g, 0.5, 0.01).cwiseProduct(g.y.array().pow(p.kappa - 1.0).matrix());
    const EnergyRecord e = energies(solve_ivp(op, h0, Vec::Zero(N), 0.0, 1.0));
    drifts.push_back(drift(e.E_conserved));
    growth.push_back(gronwall_fit(e.t, e.E_conserved).M);
  }
  // The fitted growth rate is discretization noise and shrinks under refinement.
  CHECK(growth[1] < 0.5 * growth[0]);
  CHECK(drifts[1] < 5e-3);
  CHECK(std::log(drifts[0] / drifts[1]) / std::log(2.0) >= 1.8);
}

TEST_CASE("twisted equation conserves its energy for n = 3") {
  const Params p = params(3);
  const RadialGrid g = build_radial_grid(200, 2.0, 3);
  const ModeOperator op = assemble_mode_operator(0, twisted_equation(p), p, g);
  const Vec h0 = gaussian(g, 0.5, 0.01).cwiseProduct(g.y.array().pow(p.kappa - 1.0).matrix());
  const EnergyRecord e = energies(solve_ivp(op, h0, Vec::Zero(g.size()), 0.0, 1.0));
  CHECK(drift(e.E_conserved) < 2e-3);
  CHECK((e.E2.array() >= e.E1.array()).all());
}

TEST_CASE("time reversal") {
  for (double grading : {1.0, 2.0}) {
    const Params p = params(3);
    const RadialGrid g = build_radial_grid(200, grading, 3);
    const ModeOperator op = assemble_mode_operator(1, EquationSpec{}, p, g);
    const Vec h0 = gaussian(g, 0.5, 0.01, 1);
    const Vec z = Vec::Zero(g.size());
    const double amax = op.apply(h0, 0.0).cwiseAbs().maxCoeff();
    for (double cfl : {0.5, 0.25}) {
      SolveOptions o;
      o.cfl = cfl;
      const auto [H, Ht] = evolve_batch(op, h0, z, 0.0, 1.0, o);
      const auto [H2, Ht2] = evolve_batch(op, H, Ht, 1.0, 0.0, o);
      const double dt = default_dt(g, cfl);
      CHECK((H2 - h0).cwiseAbs().maxCoeff() <= dt * dt * amax);
    }
  }
}

TEST_CASE("leapfrog is second order in time") {
  const Params p = params(1);
  const RadialGrid g = build_radial_grid(200, 2.0, 1);
  const ModeOperator op = assemble_mode_operator(0, EquationSpec{}, p, g);
  const Vec h0 = gaussian(g, 0.5, 0.01);
  const Vec z = Vec::Zero(g.size());
  SolveOptions ref;
  ref.scheme = Scheme::RK4;
  ref.cfl = 0.0625;
  const Mat Href = evolve_batch(op, h0, z, 0.0, 0.5, ref).first;
  std::vector<double> errs;
  for (double cfl : {0.5, 0.25}) {
    SolveOptions o;
    o.cfl = cfl;
    errs.push_back((evolve_batch(op, h0, z, 0.0, 0.5, o).first - Href).cwiseAbs().maxCoeff());
  }
  CHECK(std::log(errs[0] / errs[1]) / std::log(2.0) >= 1.8);
}

TEST_CASE("batches are linear and column independent") {
  const Params p = params(3);
  const RadialGrid g = build_radial_grid(100, 2.0, 3);
  const ModeOperator op = assemble_mode_operator(1, demo_equation(), p, g);
  Mat H0(g.size(), 2), Ht0 = Mat::Zero(g.size(), 2);
  H0.col(0) = gaussian(g, 0.4, 0.01, 1);
  H0.col(1) = gaussian(g, 0.7, 0.02, 1);
  const auto [H, Ht] = evolve_batch(op, H0, Ht0, 0.0, 0.3);
  const Mat single = evolve_batch(op, H0.col(1), Ht0.col(1), 0.0, 0.3).first;
  CHECK((H.col(1) - single).cwiseAbs().maxCoeff() == 0.0);
  const Mat sum = evolve_batch(op, H0.col(0) + 2.0 * H0.col(1), Ht0.col(0), 0.0, 0.3).first;
  CHECK((sum - H.col(0) - 2.0 * H.col(1)).cwiseAbs().maxCoeff() < 1e-9 * H.cwiseAbs().maxCoeff());

  const Trajectory tr = solve_ivp(op, H0.col(1), Ht0.col(1), 0.0, 0.3);
  CHECK(tr.t(tr.t.size() - 1) == doctest::Approx(0.3));
  CHECK((tr.h.row(tr.h.rows() - 1).transpose() - single).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("CFL violation is a configuration error") {
  const Params p = params(1);
  const RadialGrid g = build_radial_grid(64, 2.0, 1);
  const ModeOperator op = assemble_mode_operator(0, EquationSpec{}, p, g);
  SolveOptions o;
  o.dt = 2.0 * default_dt(g, o.cfl);
  CHECK_THROWS_AS(solve_ivp(op, Vec::Ones(g.size()), Vec::Zero(g.size()), 0.0, 0.1, o), ConfigError);
  o.dt = 0.0;
  o.cfl = 0.0;
  CHECK_THROWS_AS(solve_ivp(op, Vec::Ones(g.size()), Vec::Zero(g.size()), 0.0, 0.1, o), ConfigError);
}

TEST_CASE("E1 Gram matrix matches the energy record") {
  const Params p = params(3);
  const RadialGrid g = build_radial_grid(100, 2.0, 3);
  const ModeOperator op = assemble_mode_operator(1, EquationSpec{}, p, g);
  const Vec h0 = gaussian(g, 0.5, 0.02, 1);
  const Vec ht0 = gaussian(g, 0.3, 0.02, 1);
  const Trajectory tr = solve_ivp(op, h0, ht0, 0.0, 0.1);
  const Mat G = e1_gram(1, p, g, h0, ht0);
  CHECK(G(0, 0) == doctest::Approx(energies(tr).E1(0)).epsilon(1e-10));
}

TEST_CASE("Neumann trace and Gronwall fit") {
  const Params p = params(1);
  const RadialGrid g = build_radial_grid(100, 2.0, 1);
  const ModeOperator op = assemble_mode_operator(0, EquationSpec{}, p, g);
  const Trajectory tr = solve_ivp(op, gaussian(g, 0.8, 0.02), Vec::Zero(g.size()), 0.0, 0.2);
  const TraceData td = extract_traces(tr);
  CHECK((td.neumann + (1.0 - 2.0 * p.kappa) * tr.h_boundary).cwiseAbs().maxCoeff() == 0.0);

  Vec t = Vec::LinSpaced(11, 0.0, 1.0);
  const GronwallFit fit = gronwall_fit(t, t.array().unaryExpr([](double s) { return std::exp(0.5 * s); }).matrix());
  CHECK(fit.M == doctest::Approx(0.5));
  CHECK_FALSE(fit.pass);
  CHECK_THROWS_AS(gronwall_fit(t, Vec::Zero(11)), ConfigError);
}
