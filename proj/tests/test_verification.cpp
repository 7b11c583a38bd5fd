#include <doctest.h>

#include "swl/corpus.hpp"
#include "swl/experiments.hpp"
#include "swl/verification.hpp"

#include <cmath>

using namespace swl;

namespace {

Params params(int n, double k) {
  Params p;
  p.n = n;
  p.kappa = k;
  p.T = 1.0;
  p.c = select_c(n, k, 1.0);
  return p;
}

Grids grids(int N, int n, int nt = 0) {
  return Grids{build_radial_grid(N, 2.0, n), build_time_grid(1.0, nt > 0 ? nt : N)};
}

// u = y^{1-k} chi(t): equality case of the Hardy bound at q = 2k.
AnalyticField extremal() {
  return {"extremal", 0, [](double t, double) { return corpus_time_profile(t, 1.0); }};
}

}  // namespace

TEST_CASE("refinement order of a synthetic sequence") {
  CHECK(refinement_order({100, 200, 400}, {1e-2, 2.5e-3, 6.25e-4}) == doctest::Approx(2.0));
  CHECK(refinement_order({10, 20}, {1.0, 0.125}) == doctest::Approx(3.0));
}

TEST_CASE("finish helpers") {
  IdentityReport r;
  r.lhs = 1.0;
  r.rhs = 1.001;
  finish_identity(r, 1e-2);
  CHECK(r.pass);
  CHECK(r.relative_residual == doctest::Approx(0.001 / 1.001));
  r.lhs = 0.99;
  r.rhs = 1.0;
  finish_inequality(r, 5e-3);
  CHECK_FALSE(r.pass);
  CHECK(r.slack == doctest::Approx(-0.01));
}

TEST_CASE("multiplier identity on the corpus") {
  for (int n : {1, 3}) {
    const Params p = params(n, -0.25);
    const Grids g = grids(400, n);
    for (const AnalyticField& f : standard_corpus(p)) {
      const IdentityReport r = check_multiplier_identity(sample(f, g), p, {0.1}, g);
      INFO(f.name);
      CHECK(r.pass);
      CHECK(r.relative_residual < 1e-3);
    }
  }
}

TEST_CASE("zero field makes the identity vacuous") {
  const Params p = params(3, -0.25);
  const Grids g = grids(64, 3);
  ModeField z{0, Mat::Zero(g.time.size(), g.radial.size())};
  const IdentityReport r = check_multiplier_identity(z, p, {0.1}, g);
  CHECK(r.vacuous);
  CHECK(r.pass);
}

TEST_CASE("fields that are not time-compact are rejected") {
  const Params p = params(1, -0.25);
  const Grids g = grids(64, 1);
  ModeField f{0, Mat::Ones(g.time.size(), g.radial.size())};
  CHECK_THROWS_AS(check_multiplier_identity(f, p, {0.1}, g), ConfigError);
}

TEST_CASE("multiplier inequality and its fault injection") {
  const Params p = params(4, -0.25);
  const Grids g = grids(400, 4);
  for (const AnalyticField& f : standard_corpus(p)) {
    INFO(f.name);
    CHECK(check_multiplier_inequality(sample(f, g), p, {0.1}, g).pass);
  }
  Params q = p;
  q.c = 0.01;
  AnalyticField near{"near_boundary", 0, [k = q.kappa](double t, double r) {
                       return corpus_time_profile(t, 1.0) * poly_bump((2.0 * r - 1.29) / 0.69) *
                              std::pow(1.0 - r, k - 1.0);
                     }};
  const ModeField u = sample(near, g);
  CHECK(check_multiplier_inequality(u, q, {0.1}, g).pass);
  MultiplierInequalityOptions bad;
  bad.flip_hardy = true;
  const IdentityReport flipped = check_multiplier_inequality(u, q, {0.1}, g, bad);
  CHECK_FALSE(flipped.pass);
  CHECK(flipped.slack < 0.0);
}

TEST_CASE("pointwise Hardy bound") {
  for (int n : {1, 3}) {
    const Params p = params(n, -0.25);
    const Grids g = grids(400, n);
    for (const AnalyticField& f : standard_corpus(p)) {
      for (double q : {1.0, 2.0 * p.kappa, 4.0 * p.kappa + 1.0}) {
        INFO(f.name << " q=" << q);
        CHECK(check_hardy_pointwise(sample(f, g), q, {0.05}, g, p).pass);
      }
    }
  }
  // Near-equality case: the slack is tiny, and negating the flux breaks it.
  const Params p = params(3, -0.25);
  const Grids g = grids(400, 3);
  const ModeField u = sample(extremal(), g);
  const IdentityReport ok = check_hardy_pointwise(u, 2.0 * p.kappa, {0.05}, g, p);
  CHECK(ok.pass);
  CHECK(std::abs(ok.slack) < 1e-3 * std::max(std::abs(ok.lhs), std::abs(ok.rhs)));
  HardyOptions flip;
  flip.flip_flux = true;
  CHECK_FALSE(check_hardy_pointwise(u, 2.0 * p.kappa, {0.05}, g, p, flip).pass);
}

TEST_CASE("closed forms at n_r = 800") {
  for (int n : {1, 3, 4}) {
    const Params p = params(n, -0.4);
    for (const IdentityReport& r :
         check_closed_forms(p, build_radial_grid(800, 2.0, n), {1.0, 2.0 * p.kappa, 2.0 * p.kappa + 1.0})) {
      INFO(r.name);
      CHECK(r.pass);
    }
  }
}

TEST_CASE("integrated Hardy ratio") {
  for (int n : {1, 3}) {
    const Params p = params(n, -0.25);
    const Grids g = grids(400, n);
    for (const AnalyticField& f : standard_corpus(p)) {
      const IdentityReport r = check_integrated_hardy(sample(f, g), -1.0, 1.0, g, p);
      INFO(f.name);
      CHECK(r.pass);
      if (!r.vacuous) CHECK(r.term("ratio") <= 1.1 * r.term("C_H"));
    }
  }
  CHECK(check_integrated_hardy(sample(extremal(), grids(100, 1)), -1.0, 1.0, grids(100, 1), params(1, -0.25))
            .term("C_H") == doctest::Approx(8.0 / 2.25));
}

TEST_CASE("boundary limits of a Dirichlet field") {
  for (int n : {1, 3}) {
    for (double lambda : {0.0, 1.0}) {
      Params p = params(n, -0.25);
      p.lambda = lambda;
      const Grids g = grids(800, n, 200);
      for (const IdentityReport& r : check_boundary_limits(sample(extremal(), g), p, {0.2, 0.1, 0.05, 0.025}, g)) {
        INFO(r.name << " n=" << n << " lambda=" << lambda);
        CHECK(r.pass);
      }
    }
  }
}

TEST_CASE("conjugated bound") {
  const Params p = params(3, -0.25);
  const Grids g = grids(200, 3);
  for (const AnalyticField& f : standard_corpus(p)) {
    const IdentityReport r = check_conjugated_bound(sample(f, g), 20.0, p, {0.05}, g);
    INFO(f.name);
    CHECK(r.pass);
  }
}

TEST_CASE("Carleman constant") {
  const Params p = params(1, -0.25);
  const Grids g = grids(200, 1);
  const std::vector<AnalyticField> corpus = standard_corpus(p);
  const IdentityReport r = check_carleman(sample(corpus[2], g), 160.0, p, g);
  CHECK(r.pass);
  // Dirichlet data: C0 tends to 4(1-2k)^2/(1+2k) as lambda grows.
  CHECK(r.term("C0") == doctest::Approx(18.0).epsilon(1e-2));
  CHECK(r.term("lambda3_coefficient") == 160.0 * 160.0 * 160.0);

  ModeField z{0, Mat::Zero(g.time.size(), g.radial.size())};
  const IdentityReport zr = check_carleman(z, 10.0, p, g);
  CHECK(zr.vacuous);
  CHECK_FALSE(zr.pass);

  const IdentityReport dv = check_carleman(neumann_branch_field(p, g).field, 10.0, p, g);
  CHECK(dv.divergent);
  CHECK_FALSE(dv.pass);
  CHECK(std::isnan(dv.term("C0")));
}

TEST_CASE("Carleman check enforces the weight constraints") {
  Params p = params(3, -0.25);
  p.c = 0.1;
  const Grids g = grids(64, 3);
  CHECK_THROWS_AS(check_carleman(sample(extremal(), g), 10.0, p, g), ConfigError);
}

TEST_CASE("interior max norm and Neumann trace") {
  const Params p = params(1, -0.25);
  const Grids g = grids(100, 1);
  Mat m = Mat::Zero(g.time.size(), g.radial.size());
  m(3, 0) = 5.0;
  m(4, g.radial.size() / 2) = 2.0;
  CHECK(interior_max_norm(m, g.radial, 0.05) == doctest::Approx(2.0));
  ModeField f{0, Mat::Constant(g.time.size(), g.radial.size(), 2.0)};
  const Vec N = neumann_trace(f, g.radial, p);
  CHECK(N(0) == doctest::Approx(-(1.0 - 2.0 * p.kappa) * 2.0));
}
