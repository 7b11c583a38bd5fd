#pragma once

#include "swl/carleman_weights.hpp"
#include "swl/fields_ops.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace swl {

/// The truncated cylinder eps < r < 1 - eps.
struct TruncationSpec {
  double epsilon = 0.05;
};

void validate(const TruncationSpec& tr, const RadialGrid& grid);

struct IdentityReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;           ///< |lhs - rhs|
  double relative_residual = 0.0;  ///< residual / max(|lhs|, |rhs|, floor)
  double slack = 0.0;              ///< lhs - rhs, for inequalities
  std::optional<double> refinement_order;
  bool pass = false;
  bool vacuous = false;
  bool divergent = false;
  std::vector<std::pair<std::string, double>> terms;

  double term(const std::string& key) const;
};

inline constexpr double kScaleFloor = 1e-30;

/// Fill residual fields from lhs and rhs.
void finish_identity(IdentityReport& rep, double tol);
/// Fill slack fields; passes iff lhs - rhs >= -tol * max(|lhs|, |rhs|).
void finish_inequality(IdentityReport& rep, double tol);

/// Least-squares slope of -log(err) against log(n) for a refinement study.
double refinement_order(const std::vector<double>& sizes, const std::vector<double>& errors);

struct HardyOptions {
  double tol = 5e-3;
  bool flip_flux = false;  ///< fault injection: negate the boundary flux term
};

IdentityReport check_hardy_pointwise(const ModeField& u, double q, const TruncationSpec& tr,
                                     const Grids& g, const Params& p, HardyOptions opt = {});

IdentityReport check_multiplier_identity(const ModeField& u, const Params& p,
                                         const TruncationSpec& tr, const Grids& g,
                                         double tol = 1e-2);

struct MultiplierInequalityOptions {
  double tol = 5e-3;
  bool flip_hardy = false;  ///< fault injection: mis-signed Hardy correction
};

IdentityReport check_multiplier_inequality(const ModeField& u, const Params& p,
                                           const TruncationSpec& tr, const Grids& g,
                                           MultiplierInequalityOptions opt = {});

/// Closed forms of w and A against numerical differentiation of their definitions.
std::vector<IdentityReport> check_closed_forms(const Params& p, const RadialGrid& grid,
                                               const std::vector<double>& q_list,
                                               double tol = 1e-4, double y_min = 0.1);

/// Conjugated bound for v = e^{lambda f} u, with the unquantified case-row
/// constants set to zero (their integrals are reported as terms).
IdentityReport check_conjugated_bound(const ModeField& u, double lambda, const Params& p,
                                      const TruncationSpec& tr, const Grids& g,
                                      double tol = 5e-3);

/// Outer boundary limits on Gamma_eps^+ as eps -> 0, extrapolated and compared
/// with trace targets. Reports, in order: time-derivative limit, D_r limit,
/// weighted L^2 limit, Neumann trace, and the two super-Dirichlet limits.
std::vector<IdentityReport> check_boundary_limits(const ModeField& u, const Params& p,
                                                  const std::vector<double>& eps_sequence,
                                                  const Grids& g, double tol = 0.02);

/// Integrated Hardy ratio over t0 < t < t1 on the full ball.
IdentityReport check_integrated_hardy(const ModeField& u, double t0, double t1, const Grids& g,
                                      const Params& p);

/// Empirical Carleman constant C0 = LHS / RHS0 at one lambda (p.c is used).
IdentityReport check_carleman(const ModeField& u, double lambda, const Params& p,
                              const Grids& g);

/// Max-norm of an array over nodes with eps < r < 1 - eps.
double interior_max_norm(const Mat& m, const RadialGrid& grid, double eps);

/// Neumann trace -(1 - 2k) h(t, 1), with h extrapolated from the outer nodes.
Vec neumann_trace(const ModeField& u, const RadialGrid& grid, const Params& p);

}  // namespace swl
