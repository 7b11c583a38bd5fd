#include "swl/corpus.hpp"

#include <cmath>
#include <random>

namespace swl {

double poly_bump(double s) {
  if (std::abs(s) >= 1.0) return 0.0;
  const double a = 1.0 - s * s;
  const double a2 = a * a;
  return a2 * a2 * a2;
}

double corpus_time_profile(double t, double T) { return poly_bump(t / (T - T / 8.0)); }

namespace {

double radial_bump(double r, double lo, double hi) {
  return poly_bump((2.0 * r - lo - hi) / (hi - lo));
}

}  // namespace

std::vector<AnalyticField> standard_corpus(const Params& p, std::uint64_t seed) {
  validate(p);
  const double k = p.kappa;
  const double T = p.T;
  const int odd_ell = (p.n == 1) ? 1 : 2;
  // h = y^{k-1} u; an interior u needs the inverse weight.
  auto detwist = [k](double r) { return std::pow(1.0 - r, k - 1.0); };
  // (1 - r^2)^{1-k} = y^{1-k} (1 + r)^{1-k} is even in r and vanishes like y^{1-k}.
  auto dirichlet = [k](double r) { return std::pow(1.0 + r, 1.0 - k); };

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const double a1 = unif(rng), a2 = unif(rng), a3 = unif(rng);
  const double b1 = unif(rng), b2 = unif(rng);
  const double c1 = 1.0 + 0.5 * unif(rng), c2 = 1.0 + 0.5 * unif(rng), c3 = 0.5 * unif(rng);

  std::vector<AnalyticField> out;
  out.push_back({"bump_interior", 0, [=](double t, double r) {
                   return corpus_time_profile(t, T) * radial_bump(r, 0.3, 0.6) * detwist(r);
                 }});
  out.push_back({"bump_mode", odd_ell, [=](double t, double r) {
                   return corpus_time_profile(t, T) * r * radial_bump(r, 0.25, 0.7) * detwist(r);
                 }});
  out.push_back({"dirichlet_poly", 0, [=](double t, double r) {
                   return corpus_time_profile(t, T) * dirichlet(r) * (1.0 + r * r);
                 }});
  out.push_back({"dirichlet_mode", odd_ell, [=](double t, double r) {
                   return corpus_time_profile(t, T) * dirichlet(r) * std::pow(r, odd_ell) *
                          (1.0 - 0.5 * r * r);
                 }});
  out.push_back({"random_smooth", 0, [=](double t, double r) {
                   const double chi = corpus_time_profile(t, T);
                   const double s = t / T;
                   const double g = 1.0 + 0.5 * (a1 * std::cos(r) + a2 * std::cos(2.0 * r)) +
                                    s * (a3 + b1 * std::cos(3.0 * r)) + b2 * s * s * r * r;
                   return chi * dirichlet(r) * g;
                 }});
  out.push_back({"random_bumps", 0, [=](double t, double r) {
                   const double chi = corpus_time_profile(t, T);
                   const double s = t / T;
                   return chi * detwist(r) *
                          (c1 * radial_bump(r, 0.2, 0.55) + c2 * radial_bump(r, 0.45, 0.85) +
                           c3 * s * radial_bump(r, 0.3, 0.8));
                 }});
  return out;
}

ModeField sample(const AnalyticField& field, const Grids& g) {
  ModeField m;
  m.ell = field.ell;
  m.h.resize(g.time.size(), g.radial.size());
  for (Index i = 0; i < g.time.size(); ++i) {
    for (Index j = 0; j < g.radial.size(); ++j) m.h(i, j) = field.h(g.time.t(i), g.radial.r(j));
  }
  return m;
}

}  // namespace swl
