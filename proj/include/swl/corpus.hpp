#pragma once

#include "swl/fields_ops.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace swl {

/// A mode field given in closed form through its detwisted profile h(t, r).
struct AnalyticField {
  std::string name;
  int ell = 0;
  std::function<double(double, double)> h;
};

/// (1 - s^2)^6 on |s| < 1, zero outside.
double poly_bump(double s);
/// Time profile supported in |t| <= T - delta, delta = T/8.
double corpus_time_profile(double t, double T);

/// Six smooth fields, each supported in |t| < T - T/8: two interior radial
/// bumps, two boundary-admissible Dirichlet profiles, and two seeded random
/// combinations. Profiles that reach r = 0 have the parity of their mode.
std::vector<AnalyticField> standard_corpus(const Params& p, std::uint64_t seed = 0);

ModeField sample(const AnalyticField& field, const Grids& g);

}  // namespace swl
