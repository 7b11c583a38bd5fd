#include "swl/domain_grid.hpp"

#include "swl/stencil.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace swl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Exponent s of g ~ x^s at x -> 0 from three samples ordered by increasing x.
// Returns NaN when the samples are not of one strict sign.
double edge_exponent(double xa, double ga, double xb, double gb, double xc, double gc) {
  if (!(ga * gb > 0.0 && gb * gc > 0.0)) return kNaN;
  const double s_ab = std::log(gb / ga) / std::log(xb / xa);
  const double s_bc = std::log(gc / gb) / std::log(xc / xb);
  const double m_ab = std::sqrt(xa * xb);
  const double m_bc = std::sqrt(xb * xc);
  return s_ab - (s_bc - s_ab) * m_ab / (m_bc - m_ab);
}

struct EndCell {
  double value = 0.0;
  double exponent = kNaN;
  bool divergent = false;
};

// int_0^{xa} g, with g ~ ga (x/xa)^s.
EndCell end_cell(double xa, double ga, double xb, double gb, double xc, double gc) {
  EndCell e;
  e.exponent = edge_exponent(xa, ga, xb, gb, xc, gc);
  if (std::isnan(e.exponent)) {
    e.value = ga * xa;
  } else if (e.exponent <= kDivergenceThreshold) {
    e.divergent = true;
    e.value = kNaN;
  } else {
    e.value = ga * xa / (e.exponent + 1.0);
  }
  return e;
}

}  // namespace

void validate(const Params& p) {
  if (p.n == 2) throw ConfigError("n = 2 excluded by Theorem hypotheses");
  if (p.n < 1) throw ConfigError("n must be a positive integer");
  constexpr double tol = 1e-12;
  if (!(p.kappa > -0.5 + tol && p.kappa < -tol)) {
    throw ConfigError("κ must lie in (−1/2, 0)");
  }
  if (!(p.T > 0.0)) throw ConfigError("T must be positive");
  if (!(p.lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
  if (!(p.c >= 0.0)) throw ConfigError("c must be nonnegative");
  if (p.carleman_admissible) {
    if (!(p.c > 0.0 && p.c < 0.2)) throw ConfigError("c must lie in (0, 1/5)");
    if (48.0 * p.c * p.c * p.T * p.T > 1.0 + 1e-12) {
      throw ConfigError("c violates 48 c^2 T^2 <= 1");
    }
    if (p.n == 3 && p.c > std::abs(p.kappa) / 120.0 + 1e-15) {
      throw ConfigError("n = 3 requires c <= |kappa|/120");
    }
  }
}

double sphere_area(int n) {
  if (n < 1) throw ConfigError("sphere_area: n must be positive");
  // |S^{n-1}| = 2 pi^{n/2} / Gamma(n/2)
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

double ball_volume(int n) { return sphere_area(n) / n; }

RadialGrid build_radial_grid(int n_r, double p, int n) {
  if (n_r < 16) throw ConfigError("build_radial_grid: n_r must be >= 16");
  if (!(p >= 1.0)) throw ConfigError("build_radial_grid: grading exponent must be >= 1");
  if (n < 1 || n == 2) throw ConfigError("n = 2 excluded by Theorem hypotheses");

  RadialGrid g;
  g.n = n;
  g.grading = p;
  g.r.resize(n_r);
  g.y.resize(n_r);
  // Largest y first so that r increases with the index.
  for (int k = 0; k < n_r; ++k) {
    const int j = n_r - k;
    const double yj = std::pow(static_cast<double>(j) / (n_r + 1), p);
    g.y(k) = yj;
    g.r(k) = 1.0 - yj;
  }

  const double area = sphere_area(n);
  g.w.setZero(n_r);
  for (int k = 0; k + 1 < n_r; ++k) {
    const double h = g.r(k + 1) - g.r(k);
    g.w(k) += 0.5 * h;
    g.w(k + 1) += 0.5 * h;
  }
  for (int k = 0; k < n_r; ++k) g.w(k) *= std::pow(g.r(k), n - 1);
  // End cells with the density frozen at the outermost node.
  g.w(0) += std::pow(g.r(0), n) / n;
  g.w(n_r - 1) += (1.0 - std::pow(g.r(n_r - 1), n)) / n;
  g.w *= area;
  return g;
}

TimeGrid build_time_grid(double T, int n_t) {
  if (!(T > 0.0)) throw ConfigError("build_time_grid: T must be positive");
  if (n_t < 2) throw ConfigError("build_time_grid: need at least 2 intervals");
  TimeGrid g;
  g.T = T;
  g.dt = 2.0 * T / n_t;
  g.t.resize(n_t + 1);
  for (int i = 0; i <= n_t; ++i) g.t(i) = -T + g.dt * i;
  g.t(n_t) = T;
  g.w = Vec::Constant(n_t + 1, g.dt);
  g.w(0) = g.w(n_t) = 0.5 * g.dt;
  return g;
}

double angular_eigenvalue(int ell, int n) {
  if (ell < 0) throw ConfigError("angular_eigenvalue: ell must be >= 0");
  return static_cast<double>(ell) * (ell + n - 2);
}

ModeSet build_mode_set(int n, int ell_max) {
  if (n < 1 || n == 2) throw ConfigError("n = 2 excluded by Theorem hypotheses");
  if (ell_max < 0) throw ConfigError("build_mode_set: ell_max must be >= 0");
  ModeSet m;
  m.n = n;
  const int top = (n == 1) ? std::min(ell_max, 1) : ell_max;
  for (int ell = 0; ell <= top; ++ell) {
    m.ell.push_back(ell);
    m.eigenvalue.push_back(angular_eigenvalue(ell, n));
  }
  return m;
}

Integral integrate_space(const Eigen::Ref<const Vec>& density, const RadialGrid& grid) {
  const Index N = grid.size();
  if (density.size() != N) throw ConfigError("integrate_space: density/grid length mismatch");
  if (!density.allFinite()) throw ConfigError("integrate_space: non-finite density");

  const int n = grid.n;
  Vec g(N);
  for (Index k = 0; k < N; ++k) g(k) = std::pow(grid.r(k), n - 1) * density(k);

  double sum = 0.0;
  for (Index k = 0; k + 1 < N; ++k) sum += 0.5 * (grid.r(k + 1) - grid.r(k)) * (g(k) + g(k + 1));

  Integral out;
  const EndCell inner = end_cell(grid.r(0), g(0), grid.r(1), g(1), grid.r(2), g(2));
  const EndCell outer =
      end_cell(grid.y(N - 1), g(N - 1), grid.y(N - 2), g(N - 2), grid.y(N - 3), g(N - 3));
  out.edge_exponent = outer.exponent;
  if (inner.divergent || outer.divergent) {
    out.divergent = true;
    out.value = kNaN;
    return out;
  }
  out.value = sphere_area(n) * (sum + inner.value + outer.value);
  return out;
}

Integral integrate_spacetime(const Eigen::Ref<const Mat>& density, const TimeGrid& tg,
                             const RadialGrid& rg) {
  if (density.rows() != tg.size() || density.cols() != rg.size()) {
    throw ConfigError("integrate_spacetime: sample array shape mismatch");
  }
  Integral out;
  double worst = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < tg.size(); ++i) {
    const Integral row = integrate_space(density.row(i).transpose(), rg);
    if (row.divergent) {
      out.divergent = true;
      out.value = kNaN;
      out.edge_exponent = row.edge_exponent;
      return out;
    }
    if (!std::isnan(row.edge_exponent)) worst = std::min(worst, row.edge_exponent);
    out.value += tg.w(i) * row.value;
  }
  out.edge_exponent = std::isinf(worst) ? kNaN : worst;
  return out;
}

Probe make_probe(const RadialGrid& grid, double r) {
  const Index N = grid.size();
  if (N < 4) throw ConfigError("make_probe: grid too small");
  const Index k = static_cast<Index>(std::lower_bound(grid.r.data(), grid.r.data() + N, r) - grid.r.data());
  // Two nodes on each side of r where possible.
  const Index first = std::clamp<Index>(k - 2, 0, N - 4);
  Probe p;
  p.first = first;
  for (int a = 0; a < 4; ++a) {
    double w = 1.0;
    for (int b = 0; b < 4; ++b) {
      if (b != a) w *= (r - grid.r(first + b)) / (grid.r(first + a) - grid.r(first + b));
    }
    p.w[a] = w;
  }
  return p;
}

double integrate_shell(const Eigen::Ref<const Vec>& density, const RadialGrid& grid, double a,
                       double b) {
  const Index N = grid.size();
  if (density.size() != N) throw ConfigError("integrate_shell: density/grid length mismatch");
  if (!(a < b) || a <= grid.r(0) || b >= grid.r(N - 1)) {
    throw ConfigError("integrate_shell: shell must lie strictly inside the node range");
  }
  const int n = grid.n;
  auto g = [&](Index k) { return std::pow(grid.r(k), n - 1) * density(k); };
  // Each cell integrates the cubic through its four nearest nodes, partial
  // cells included, with a Gauss rule that is exact for that cubic.
  static const double gx[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  static const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const Index first = static_cast<Index>(
      std::upper_bound(grid.r.data(), grid.r.data() + N, a) - grid.r.data()) - 1;
  double sum = 0.0;
  for (Index k = first; k + 1 < N && grid.r(k) < b; ++k) {
    const double lo = std::max(a, grid.r(k)), hi = std::min(b, grid.r(k + 1));
    if (!(hi > lo)) continue;
    const Index s = std::clamp<Index>(k - 1, 0, N - 4);
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    for (int q = 0; q < 3; ++q) {
      const double x = mid + half * gx[q];
      double v = 0.0;
      for (Index i = s; i < s + 4; ++i) {
        double l = 1.0;
        for (Index m = s; m < s + 4; ++m) {
          if (m != i) l *= (x - grid.r(m)) / (grid.r(i) - grid.r(m));
        }
        v += l * g(i);
      }
      sum += half * gw[q] * v;
    }
  }
  return sphere_area(n) * sum;
}

double integrate_shell_spacetime(const Eigen::Ref<const Mat>& density, const TimeGrid& tg,
                                 const RadialGrid& rg, double a, double b) {
  if (density.rows() != tg.size() || density.cols() != rg.size()) {
    throw ConfigError("integrate_shell_spacetime: sample array shape mismatch");
  }
  double sum = 0.0;
  for (Index i = 0; i < tg.size(); ++i) {
    if (tg.w(i) == 0.0) continue;
    sum += tg.w(i) * integrate_shell(density.row(i).transpose(), rg, a, b);
  }
  return sum;
}

WeightedRule product_weights(const RadialGrid& grid, const std::function<double(double)>& W_of_y,
                             double edge_exponent) {
  const Index N = grid.size();
  WeightedRule rule;
  rule.w.setZero(N);
  if (edge_exponent <= kDivergenceThreshold) {
    rule.divergent = true;
    rule.w.setConstant(kNaN);
    return rule;
  }
  const int n = grid.n;
  const GaussRule& gl = gauss_legendre_rule();
  auto jac = [n](double y) { return std::pow(1.0 - y, n - 1); };

  // Linear hat between nodes ka, kb (extrapolating outside), integrated
  // against W over [y_lo, y_hi] with panels uniform in log y.
  auto accumulate_log = [&](Index ka, Index kb, double y_lo, double y_hi, int panels) {
    const double ya = grid.y(ka), yb = grid.y(kb);
    const double l0 = std::log(y_lo), l1 = std::log(y_hi);
    const double dl = (l1 - l0) / panels;
    for (int p = 0; p < panels; ++p) {
      const double c = l0 + (p + 0.5) * dl;
      for (std::size_t q = 0; q < gl.x.size(); ++q) {
        const double y = std::exp(c + 0.5 * dl * gl.x[q]);
        const double m = 0.5 * dl * gl.w[q] * y * W_of_y(y) * jac(y);
        rule.w(ka) += m * (y - yb) / (ya - yb);
        rule.w(kb) += m * (y - ya) / (yb - ya);
      }
    }
  };

  for (Index k = 0; k + 1 < N; ++k) {
    const double y_hi = grid.y(k), y_lo = grid.y(k + 1);
    const int panels = std::max(1, static_cast<int>(std::ceil(std::log(y_hi / y_lo) / 0.25)));
    accumulate_log(k, k + 1, y_lo, y_hi, panels);
  }

  // Boundary cell 0 < y < y_min, substituted as y = y_min e^{-tau}.
  {
    const double decay = std::max(edge_exponent + 1.0, 1e-3);
    const double y_min = grid.y(N - 1);
    const double tau_max = std::min(60.0 / decay, std::log(y_min / 1e-300));
    const int panels = static_cast<int>(std::ceil(tau_max));
    accumulate_log(N - 1, N - 2, y_min * std::exp(-tau_max), y_min, panels);
  }

  // Centre cell 0 < r < r_0, Gauss-Legendre in r.
  {
    const double r0 = grid.r(0), r1 = grid.r(1);
    for (std::size_t q = 0; q < gl.x.size(); ++q) {
      const double r = 0.5 * r0 * (gl.x[q] + 1.0);
      const double m = 0.5 * r0 * gl.w[q] * W_of_y(1.0 - r) * std::pow(r, n - 1);
      rule.w(0) += m * (r - r1) / (r0 - r1);
      rule.w(1) += m * (r - r0) / (r1 - r0);
    }
  }
  rule.w *= sphere_area(n);
  return rule;
}

}  // namespace swl
