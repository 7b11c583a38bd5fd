// End-to-end acceptance run: one PASS/FAIL line per criterion, exit 1 on any failure.
#include "swl/cli_io.hpp"
#include "swl/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

using namespace swl;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      std::printf("    failed: %s\n", what.c_str());
    }
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Params params(int n, double k, double T = 1.0) {
  Params p;
  p.n = n;
  p.kappa = k;
  p.T = T;
  p.c = select_c(n, k, T);
  return p;
}

Grids grids(int N, int n, double T = 1.0) {
  return Grids{build_radial_grid(N, 2.0, n), build_time_grid(T, N)};
}

const std::vector<double> kKappas{-0.1, -0.25, -0.4};

bool boundary_admissible(const std::string& name) {
  return name == "dirichlet_poly" || name == "dirichlet_mode" || name == "random_smooth";
}

// Least-squares order, or "at floor" when the finest error is at rounding level.
bool order_ok(const std::vector<double>& sizes, const std::vector<double>& errs, double scale,
              double& order) {
  order = refinement_order(sizes, errs);
  return order >= 1.8 || errs.back() <= 1e-10 * scale;
}

// 1. Multiplier identity over the corpus, n in {1,3,4}, three kappas.
Outcome criterion_identity() {
  Outcome o;
  double worst_res = 0.0, worst_order = 1e9, worst_time = 0.0;
  int count = 0;
  for (int n : {1, 3, 4}) {
    for (double k : kKappas) {
      const Params p = params(n, k);
      const auto t0 = Clock::now();
      std::vector<double> sizes;
      std::vector<std::vector<double>> res;
      std::vector<std::string> names;
      for (int N : {100, 200, 400}) {
        const Grids g = grids(N, n);
        sizes.push_back(N);
        const std::vector<AnalyticField> corpus = standard_corpus(p);
        res.resize(corpus.size());
        names.clear();
        for (std::size_t f = 0; f < corpus.size(); ++f) {
          const IdentityReport r = check_multiplier_identity(sample(corpus[f], g), p, {0.1}, g);
          res[f].push_back(r.relative_residual);
          names.push_back(corpus[f].name);
          if (N == 400) {
            o.require(!r.vacuous && r.relative_residual < 1e-2,
                      fmt("n=%g kappa=%g relative residual %.3e", n, k, r.relative_residual) + " " +
                          corpus[f].name);
            worst_res = std::max(worst_res, r.relative_residual);
          }
        }
      }
      for (std::size_t f = 0; f < res.size(); ++f) {
        double order = 0.0;
        const bool ok = order_ok(sizes, res[f], 1.0, order);
        o.require(ok, fmt("n=%g kappa=%g order %.2f", n, k, order) + " " + names[f]);
        if (res[f].back() > 1e-10) worst_order = std::min(worst_order, order);
        ++count;
      }
      const double sec = seconds_since(t0);
      worst_time = std::max(worst_time, sec);
      o.require(sec < 60.0, fmt("n=%g kappa=%g took %.1f s", n, k, sec));
    }
  }
  o.detail = fmt("%g fields, max rel residual %.2e, min order %.2f", count, worst_res, worst_order) +
             fmt(", max %.1f s per configuration", worst_time);
  return o;
}

// 2. Closed forms of w and A against numerical differentiation at n_r = 800.
Outcome criterion_closed_forms() {
  Outcome o;
  double worst = 0.0;
  int count = 0;
  for (int n : {1, 3, 4, 5}) {
    for (double k : kKappas) {
      const Params p = params(n, k);
      for (const IdentityReport& r :
           check_closed_forms(p, build_radial_grid(800, 2.0, n), {1.0, 2.0 * k, 2.0 * k + 1.0})) {
        o.require(r.pass && r.relative_residual <= 1e-4,
                  fmt("n=%g kappa=%g rel %.2e", n, k, r.relative_residual) + " " + r.name);
        worst = std::max(worst, r.relative_residual);
        ++count;
      }
    }
  }
  o.detail = fmt("%g comparisons, max relative error %.2e", count, worst);
  return o;
}

// 3. Pointwise Hardy at q in {1, 2k, 4k+1}; integrated Hardy ratio.
Outcome criterion_hardy() {
  Outcome o;
  double min_slack = 1e300, worst_y = 0.0, worst_full = 0.0;
  for (int n : {1, 3, 4}) {
    for (double k : kKappas) {
      const Params p = params(n, k);
      const Grids g = grids(400, n);
      const double CH = 8.0 / ((1.0 - 2.0 * k) * (1.0 - 2.0 * k));
      for (const AnalyticField& f : standard_corpus(p)) {
        const ModeField u = sample(f, g);
        for (double q : {1.0, 2.0 * k, 4.0 * k + 1.0}) {
          const IdentityReport r = check_hardy_pointwise(u, q, {0.05}, g, p);
          const double scale = std::max({std::abs(r.lhs), std::abs(r.rhs), kScaleFloor});
          o.require(r.pass && r.slack >= -5e-3 * scale,
                    fmt("n=%g kappa=%g q=%g", n, k, q) + " " + f.name);
          min_slack = std::min(min_slack, r.slack / scale);
        }
        if (!boundary_admissible(f.name)) continue;
        const IdentityReport ih = check_integrated_hardy(u, -1.0, 1.0, g, p);
        const double y_ratio = ih.term("y_term") / ih.term("grad");
        o.require(y_ratio <= 1.1 * CH, fmt("n=%g kappa=%g y-ratio %.3f", n, k, y_ratio) + " " + f.name);
        o.require(ih.pass, fmt("n=%g kappa=%g full ratio %.3f", n, k, ih.term("ratio")) + " " + f.name);
        worst_y = std::max(worst_y, y_ratio / CH);
        worst_full = std::max(worst_full, ih.term("ratio") / ih.term("C_H"));
      }
    }
  }
  o.detail = fmt("min relative slack %.2e, max y-ratio/(8/(1-2k)^2) %.3f, max ratio/C_H %.3f", min_slack,
                 worst_y, worst_full);
  return o;
}

// 4. Operator algebra under refinement.
Outcome criterion_operators() {
  Outcome o;
  const double k = -0.25;
  std::vector<double> sizes, e_box, e_D, e_Db, e_adj;
  for (int N : {100, 200, 400}) {
    sizes.push_back(N);
    Params p3 = params(3, k);
    const Grids g = grids(N, 3);
    const Index T = g.time.size();
    auto field = [&](const std::function<double(double)>& f) {
      return broadcast_rows(g.radial.r.unaryExpr(f), T);
    };
    auto band = [&](const Mat& m) {
      double out = 0.0;
      for (Index j = 0; j < g.radial.size(); ++j) {
        if (g.radial.r(j) >= 0.1 && g.radial.r(j) <= 0.9) out = std::max(out, m.col(j).cwiseAbs().maxCoeff());
      }
      return out;
    };
    // Box_y y^k = Box_k y^k + (n-1) k y^{k-1} / r.
    const Mat yk = field([k](double r) { return std::pow(1.0 - r, k); });
    const Vec extra = ((p3.n - 1) * k / (g.radial.r.array() * g.radial.y.array())).matrix();
    e_box.push_back(band(apply_box_kappa_direct(yk, 0, g, p3) + yk * extra.asDiagonal()));
    // D y^k = 0 (h = y^{2k-1}), normalised by y^{k-1}.
    ModeField hk{0, field([k](double r) { return std::pow(1.0 - r, 2.0 * k - 1.0); })};
    const Mat scale = field([k](double r) { return std::pow(1.0 - r, k - 1.0); });
    e_D.push_back(band(apply_D(hk, g, p3).Dr_u.cwiseQuotient(scale)));
    e_Db.push_back(band(apply_Dbar_r(field([k](double r) { return std::pow(1.0 - r, -k); }), 0, g, p3)));
    // Adjointness: int (D u) v + u (Dbar v + (n-1) v / r) over a shell = boundary flux.
    ModeField f{0, field([](double r) { return (1.0 + r * r) * std::cos(r); })};
    const Mat u = u_from_h(f, g.radial, p3);
    const Mat v = field([](double r) { return std::cos(2.0 * r); });
    const Mat Du = apply_D(f, g, p3).Dr_u;
    const Mat Dv = apply_Dbar_r(v, 0, g, p3);
    const Vec r = g.radial.r;
    const Vec dens = (Du.row(0).array() * v.row(0).array() +
                      u.row(0).array() * (Dv.row(0).array() + 2.0 * v.row(0).array() / r.transpose().array()))
                         .transpose()
                         .matrix();
    auto uv = [k](double s) {
      return s * s * std::pow(1.0 - s, 1.0 - k) * (1.0 + s * s) * std::cos(s) * std::cos(2.0 * s);
    };
    const double flux = sphere_area(3) * (uv(0.8) - uv(0.2));
    e_adj.push_back(std::abs(integrate_shell(dens, g.radial, 0.2, 0.8) - flux));
  }
  double o1, o2, o3, o4;
  o.require(order_ok(sizes, e_box, 1.0, o1), fmt("Box_y y^k order %.2f, errors %.2e", o1, e_box.back()));
  o.require(order_ok(sizes, e_D, 1.0, o2), fmt("D y^k order %.2f, errors %.2e", o2, e_D.back()));
  o.require(order_ok(sizes, e_Db, 1.0, o3), fmt("Dbar y^-k order %.2f, errors %.2e", o3, e_Db.back()));
  o.require(order_ok(sizes, e_adj, 1.0, o4), fmt("adjointness order %.2f, errors %.2e", o4, e_adj.back()));
  o.detail = fmt("orders: Box_y y^k %.2f, D y^k %.2f, Dbar y^-k %.2f", o1, o2, o3) +
             fmt(", adjointness %.2f (finest residual %.1e)", o4, e_adj.back());
  return o;
}

// 5. Conservation with X = V = 0 and time reversal.
Outcome criterion_conservation() {
  Outcome o;
  const double k = -0.25;
  std::string detail;
  struct Case {
    int n, ell;
    bool twisted;
    const char* label;
  };
  for (const Case& c : {Case{1, 1, false, "n=1 odd"}, Case{3, 0, true, "n=3 twisted"}}) {
    Params p = params(c.n, k);
    std::vector<double> sizes, drifts;
    for (int N : {100, 200, 400}) {
      const RadialGrid g = build_radial_grid(N, 2.0, c.n);
      const EquationSpec spec = c.twisted ? twisted_equation(p) : EquationSpec{};
      const ModeOperator op = assemble_mode_operator(c.ell, spec, p, g);
      Vec h0(N);
      for (Index j = 0; j < N; ++j) {
        const double r = g.r(j);
        h0(j) = std::pow(g.y(j), k - 1.0) * std::exp(-std::pow((r - 0.5) / 0.1, 2));
      }
      const EnergyRecord e = energies(solve_ivp(op, h0, Vec::Zero(N), 0.0, 1.0));
      sizes.push_back(N);
      drifts.push_back((e.E_conserved.array() - e.E_conserved(0)).abs().maxCoeff() / e.E_conserved(0));
    }
    const double order = refinement_order(sizes, drifts);
    o.require(drifts.back() <= 1e-3, std::string(c.label) + fmt(" drift %.2e at n_r=400", drifts.back()));
    o.require(order >= 1.8, std::string(c.label) + fmt(" drift order %.2f", order));
    detail += std::string(c.label) + fmt(": drift %.2e, order %.2f; ", drifts.back(), order);
  }

  // Reversal returns the data to within dt^2 times the size of the acceleration,
  // and the forward error against an RK4 reference is second order.
  Params p = params(3, k);
  const RadialGrid g = build_radial_grid(200, 2.0, 3);
  const ModeOperator op = assemble_mode_operator(1, EquationSpec{}, p, g);
  const Vec h0 = g.r.unaryExpr([](double r) { return r * std::exp(-(r - 0.5) * (r - 0.5) / 0.01); });
  const Vec z = Vec::Zero(g.size());
  const double amax = op.apply(h0, 0.0).cwiseAbs().maxCoeff();
  SolveOptions ref;
  ref.scheme = Scheme::RK4;
  ref.cfl = 0.0625;
  const Mat Href = evolve_batch(op, h0, z, 0.0, 0.5, ref).first;
  std::vector<double> dts, fwd;
  double worst_rev = 0.0;
  for (double cfl : {0.5, 0.25, 0.125}) {
    SolveOptions s;
    s.cfl = cfl;
    const auto [H, Ht] = evolve_batch(op, h0, z, 0.0, 0.5, s);
    const auto [H2, Ht2] = evolve_batch(op, H, Ht, 0.5, 0.0, s);
    const double dt = default_dt(g, cfl);
    const double rev = (H2 - h0).cwiseAbs().maxCoeff();
    o.require(rev <= dt * dt * amax, fmt("reversal error %.2e > dt^2 amax %.2e", rev, dt * dt * amax));
    worst_rev = std::max(worst_rev, rev / (dt * dt * amax));
    dts.push_back(1.0 / dt);
    fwd.push_back((H - Href).cwiseAbs().maxCoeff());
  }
  const double fwd_order = refinement_order(dts, fwd);
  o.require(fwd_order >= 1.8, fmt("forward order %.2f", fwd_order));
  o.detail = detail + fmt("reversal error / (dt^2 amax) <= %.1e, forward order %.2f", worst_rev, fwd_order);
  return o;
}

// 6. Boundary exponent of solver output and super-Dirichlet limits.
Outcome criterion_asymptotics() {
  Outcome o;
  std::string detail = "exponents";
  for (double k : kKappas) {
    Params p = params(1, k);
    const RadialGrid g = build_radial_grid(400, 2.0, 1);
    const ModeOperator op = assemble_mode_operator(0, EquationSpec{}, p, g);
    const Vec h0 = g.r.unaryExpr([](double r) { return std::exp(-(r - 0.8) * (r - 0.8) / 0.02); });
    const ExponentFit fit = fit_boundary_exponent(solve_ivp(op, h0, Vec::Zero(g.size()), 0.0, 0.2));
    const double rel = std::abs(fit.exponent - (1.0 - k)) / (1.0 - k);
    o.require(rel <= 0.01, fmt("kappa=%g exponent %.5f", k, fit.exponent));
    detail += fmt(" %.4f (target %.2f)", fit.exponent, 1.0 - k);
  }
  double worst = 0.0;
  int count = 0;
  for (int n : {1, 3}) {
    for (double k : kKappas) {
      for (double lambda : {0.0, 1.0}) {
        Params p = params(n, k);
        p.lambda = lambda;
        const Grids g{build_radial_grid(800, 2.0, n), build_time_grid(1.0, 200)};
        for (const AnalyticField& f : standard_corpus(p)) {
          if (!boundary_admissible(f.name)) continue;
          for (const IdentityReport& r : check_boundary_limits(sample(f, g), p, {0.2, 0.1, 0.05, 0.025}, g)) {
            if (r.name.rfind("super_dirichlet", 0) != 0) continue;
            o.require(r.pass && r.relative_residual <= 0.02,
                      fmt("n=%g kappa=%g lambda=%g", n, k, lambda) + " " + f.name + " " + r.name +
                          fmt(" rel %.2e", r.relative_residual));
            worst = std::max(worst, r.relative_residual);
            ++count;
          }
        }
      }
    }
  }
  o.detail = detail + fmt("; %g super-Dirichlet limits, max relative %.2e", count, worst);
  return o;
}

// 7. Carleman sweep: lambda_0 exists, C0 > 0 beyond it, lambda^3 bookkeeping exact.
Outcome criterion_carleman() {
  Outcome o;
  const std::vector<double> lambdas{10, 20, 40, 80, 160};
  std::string detail;
  for (int n : {1, 3, 4}) {
    for (double k : kKappas) {
      const auto t0 = Clock::now();
      const Params p = params(n, k);
      const Grids g = grids(400, n);
      std::vector<NamedField> corpus = build_corpus("standard", p, g);
      for (NamedField& f : build_corpus("solver", p, g)) corpus.push_back(std::move(f));
      const SweepResult s = run_carleman_sweep(corpus, p, g, lambdas);
      const std::string tag = fmt("n=%g kappa=%g", n, k);
      o.require(s.lambda0_overall.has_value(), tag + " no lambda_0 in the grid");
      o.require(s.lambda3_exact, tag + " lambda^3 factor");
      o.require(!s.any_divergent && !s.all_vacuous, tag + " divergent or vacuous");
      double cmin = 1e300;
      if (s.lambda0_overall) {
        for (const SweepRecord& r : s.records) {
          if (r.lambda >= *s.lambda0_overall) {
            o.require(r.C0 > 0.0, tag + " " + r.field + fmt(" C0 %.3e at lambda %g", r.C0, r.lambda));
            cmin = std::min(cmin, r.C0);
          }
        }
      }
      const double sec = seconds_since(t0);
      o.require(sec < 300.0, tag + fmt(" took %.1f s", sec));
      if (k == -0.25) {
        detail += tag + fmt(": lambda_0 %g, min C0 %.3g, %.1f s; ", s.lambda0_overall.value_or(-1.0), cmin, sec);
      }
    }
  }
  o.detail = detail + "all 9 (n, kappa) pass";
  return o;
}

// 8. Observability at n = 1, kappa = -0.25, T = 1.2 x 8 sqrt(15).
Outcome criterion_observability() {
  Outcome o;
  const double k = -0.25;
  const double T3 = observability_threshold(3, k), T1 = observability_threshold(1, k);
  auto four = [](double x) {
    const double s = std::pow(10.0, 3 - std::floor(std::log10(x)));
    return std::round(x * s) / s;
  };
  o.require(std::abs(four(T3) - 30.98) < 1e-9, fmt("n=3 threshold %.6f", T3));
  o.require(std::abs(four(T1) - 30.98) < 1e-9, fmt("n=1 threshold %.6f", T1));
  o.require(std::abs(T1 - 8.0 * std::sqrt(15.0)) < 1e-12, "n=1 threshold formula");

  Params p = params(1, k);
  const double T = 1.2 * 8.0 * std::sqrt(15.0);
  std::vector<double> ratios;
  double short_ratio = 0.0;
  const auto t0 = Clock::now();
  for (int N : {200, 400}) {
    ObservabilityOptions opt;
    opt.n_r = N;
    opt.seeds = 10;
    const auto recs = run_observability(demo_equation(), p, {0.2 * T1, T}, 0, opt);
    const ObservabilityRecord& r = recs[1];
    o.require(r.clears_threshold && !r.vacuous, fmt("n_r=%g threshold flag", N));
    o.require(r.seed_ratios.size() == 10, "ten seeds");
    o.require(r.ratio > 0.0, fmt("n_r=%g min ratio %.3e", N, r.ratio));
    ratios.push_back(r.ratio);
    short_ratio = recs[0].ratio;
  }
  const double sec = seconds_since(t0);
  const double change = std::abs(ratios[1] / ratios[0] - 1.0);
  o.require(change <= 0.2, fmt("mesh change %.3f", change));
  o.require(sec < 900.0, fmt("took %.1f s", sec));
  o.detail = fmt("thresholds %.4f / %.4f, min ratio %.4g", T3, T1, ratios[1]) +
             fmt(" (n_r=200: %.4g, change %.2f%%)", ratios[0], 100.0 * change) +
             fmt(", T=0.2x threshold ratio %.4g, %.0f s", short_ratio, sec);
  return o;
}

// 9. Guards and divergence flags.
Outcome criterion_guards() {
  Outcome o;
  auto config_error = [](const std::string& text) {
    try {
      validate(parse_config_text(text));
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  o.require(config_error("n = 2\n") == "n = 2 excluded by Theorem hypotheses", "n = 2 at parse time");
  o.require(config_error("kappa = 0.25\n") == "κ must lie in (−1/2, 0)", "kappa = 0.25");
  o.require(config_error("kappa = -0.5\n") == "κ must lie in (−1/2, 0)", "kappa = -1/2");
  o.require(config_error("kappa = 0\n") == "κ must lie in (−1/2, 0)", "kappa = 0");
  o.require(config_error("command = sweep\nn = 3\nkappa = -0.3\n").empty(), "valid config accepted");

  const RadialGrid g = build_radial_grid(200, 2.0, 1);
  for (double e : {-1.0, -1.2}) {
    const Integral I = integrate_space(g.y.array().pow(e).matrix(), g);
    o.require(I.divergent && std::isnan(I.value), fmt("y^%g not flagged", e));
  }
  o.require(!integrate_space(g.y.array().pow(-0.5).matrix(), g).divergent, "y^-1/2 flagged");

  const Params p = params(1, -0.25);
  const Grids gg = grids(200, 1);
  const SweepResult s = run_carleman_sweep(build_corpus("neumann", p, gg), p, gg, {10, 20, 40});
  o.require(s.any_divergent && !s.pass, "Neumann-branch field not flagged");
  for (const SweepRecord& r : s.records) o.require(std::isnan(r.C0), "divergent C0 summed");
  o.detail = "parse-time rejection of n = 2 and kappa outside (-1/2, 0); y^-1, y^-1.2 and the Neumann branch flagged";
  return o;
}

}  // namespace

int main() {
  struct Item {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const Item items[] = {
      {1, "multiplier identity", criterion_identity},
      {2, "closed forms", criterion_closed_forms},
      {3, "Hardy inequalities", criterion_hardy},
      {4, "operator algebra", criterion_operators},
      {5, "solver conservation and reversal", criterion_conservation},
      {6, "boundary asymptotics", criterion_asymptotics},
      {7, "Carleman estimate", criterion_carleman},
      {8, "observability", criterion_observability},
      {9, "guards", criterion_guards},
  };
  bool all = true;
  for (const Item& it : items) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = it.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s %d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", it.id, it.name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
