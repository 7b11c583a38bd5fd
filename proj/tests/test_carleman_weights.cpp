#include <doctest.h>

#include "swl/carleman_weights.hpp"

#include <cmath>

using namespace swl;

namespace {

using Fn = std::function<double(double)>;

// Radial part of Box phi + (2k/y) grad y . grad phi, by fourth-order central differences.
double twisted_box(const Fn& phi, double r, int n, double k, double h) {
  const double p2 = phi(r + 2.0 * h), p1 = phi(r + h), p0 = phi(r), m1 = phi(r - h), m2 = phi(r - 2.0 * h);
  const double d1 = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
  const double d2 = (-p2 + 16.0 * p1 - 30.0 * p0 + 16.0 * m1 - m2) / (12.0 * h * h);
  return d2 + (n - 1) * d1 / r - 2.0 * k * d1 / (1.0 - r);
}

double closed_w(double r, int n, double k, double c) {
  Eigen::ArrayXd y(1), rr(1);
  y << 1.0 - r;
  rr << r;
  return w_fz(y, rr, n, k, c)(0);
}

double closed_A(double r, int n, double k) {
  Eigen::ArrayXd y(1), rr(1);
  y << 1.0 - r;
  rr << r;
  return A_fz(y, rr, n, k)(0);
}

}  // namespace

TEST_CASE("w_fz and A_fz from their definitions") {
  for (int n : {1, 3, 4, 5}) {
    for (double k : {-0.1, -0.25, -0.4}) {
      const double c = 0.01;
      const Fn F = [k](double r) { return -std::pow(1.0 - r, 1.0 + 2.0 * k) / (1.0 + 2.0 * k); };
      // w = 1/2 (Box f + ...) + z with f = F(r) - c t^2 and z = -4c; -d_tt(-c t^2) = 2c.
      const Fn w = [&](double r) { return 0.5 * (2.0 * c + twisted_box(F, r, n, k, 1e-4)) - 4.0 * c; };
      for (double r : {0.2, 0.5, 0.8}) {
        CHECK(w(r) == doctest::Approx(closed_w(r, n, k, c)).epsilon(1e-6));
        const Fn wc = [&](double s) { return closed_w(s, n, k, c); };
        const double A = -0.5 * twisted_box(wc, r, n, k, 1e-3);
        CHECK(A == doctest::Approx(closed_A(r, n, k)).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("d_r w_fz") {
  const int n = 4;
  const double k = -0.3, c = 0.02, r = 0.6, h = 1e-5;
  Eigen::ArrayXd y(1), rr(1);
  y << 1.0 - r;
  rr << r;
  const double fd = (closed_w(r + h, n, k, c) - closed_w(r - h, n, k, c)) / (2.0 * h);
  CHECK(dr_w_fz(y, rr, n, k)(0) == doctest::Approx(fd).epsilon(1e-7));
}

TEST_CASE("f_q family at q = 2k reproduces the radial weight") {
  Eigen::ArrayXd y(3), r(3);
  y << 0.1, 0.4, 0.7;
  r = 1.0 - y;
  const double k = -0.35;
  CHECK((f_q(y, 2.0 * k) - weight_f_radial(y, k)).abs().maxCoeff() < 1e-15);
  // w_{f_q,0} against its definition.
  for (double q : {1.0, 2.0 * k, 4.0 * k + 1.0}) {
    const Fn fq = [q](double s) { return -std::pow(1.0 - s, 1.0 + q) / (1.0 + q); };
    for (Index i = 0; i < 3; ++i) {
      const double def = 0.5 * twisted_box(fq, r(i), 3, k, 1e-4);
      CHECK(w_q(y, r, 3, k, q)(i) == doctest::Approx(def).epsilon(1e-6));
      const Fn wq = [&](double s) {
        Eigen::ArrayXd ys(1), rs(1);
        ys << 1.0 - s;
        rs << s;
        return w_q(ys, rs, 3, k, q)(0);
      };
      CHECK(A_q(y, r, 3, k, q)(i) == doctest::Approx(-0.5 * twisted_box(wq, r(i), 3, k, 1e-3)).epsilon(1e-5));
    }
  }
}

TEST_CASE("select_c") {
  CHECK(select_c(4, -0.25, 1.0) == doctest::Approx(1.0 / (4.0 * std::sqrt(3.0))));
  CHECK(select_c(1, -0.25, 2.0) == doctest::Approx(1.0 / (8.0 * std::sqrt(15.0))));
  CHECK(select_c(3, -0.25, 1.0) == doctest::Approx(0.25 / 120.0));
  CHECK(select_c(3, -0.25, 100.0) == doctest::Approx(1.0 / (400.0 * std::sqrt(15.0))));
  // Short windows hit the c < 1/5 cap.
  CHECK(select_c(4, -0.25, 0.1) < 0.2);
  CHECK_THROWS_AS(select_c(2, -0.25, 1.0), ConfigError);
}

TEST_CASE("weight bundle") {
  Params p;
  p.n = 3;
  p.kappa = -0.25;
  p.c = 0.002;
  p.lambda = 3.0;
  const Grids g{build_radial_grid(64, 2.0, 3), build_time_grid(1.0, 8)};
  const WeightFields wf = eval_weight_bundle(p, g);
  CHECK(wf.z == doctest::Approx(-0.008));
  const Index i = 2, j = 30;
  const double y = g.radial.y(j), t = g.time.t(i);
  CHECK(wf.f(i, j) == doctest::Approx(-std::pow(y, 0.5) / 0.5 - 0.002 * t * t));
  CHECK(wf.dr_f(j) == doctest::Approx(std::pow(y, -0.5)));
  CHECK(wf.exp2lf(i, j) == doctest::Approx(std::exp(6.0 * wf.f(i, j))));
  CHECK(wf.A0(i, j) == doctest::Approx(9.0 * (std::pow(y, -1.0) - 4.0 * 4e-6 * t * t) - 8.0 * 0.002 * 3.0));
  CHECK(wf.dt_f(i) == doctest::Approx(-0.004 * t));

  WeightFields big = wf;
  set_lambda(big, 1e6, g, p);
  CHECK(big.exp2lf.minCoeff() > 0.0);
  CHECK(big.exp2lf.allFinite());
}

TEST_CASE("weight bundle rejects excluded parameters") {
  Params p;
  p.n = 2;
  const Grids g{build_radial_grid(32, 2.0, 1), build_time_grid(1.0, 8)};
  CHECK_THROWS_AS(eval_weight_bundle(p, g), ConfigError);
  p.n = 1;
  p.kappa = -0.6;
  CHECK_THROWS_AS(eval_weight_bundle(p, g), ConfigError);
}

TEST_CASE("S multiplier") {
  Params p;
  p.c = 0.01;
  const Grids g{build_radial_grid(32, 2.0, 1), build_time_grid(1.0, 8)};
  const WeightFields wf = eval_weight_bundle(p, g);
  const Mat u = Mat::Constant(g.time.size(), g.radial.size(), 2.0);
  GradientBundle gb;
  gb.Dr_u = Mat::Constant(u.rows(), u.cols(), 1.0);
  gb.dt_u = Mat::Constant(u.rows(), u.cols(), 3.0);
  gb.angular_sq = Mat::Zero(u.rows(), u.cols());
  const Mat S = eval_S_multiplier(u, gb, wf, g);
  const double t = g.time.t(1);
  CHECK(S(1, 5) == doctest::Approx(wf.dr_f(5) + 2.0 * 0.01 * t * 3.0 + 2.0 * wf.w_fz(5)));
}
