#pragma once

#include "swl/corpus.hpp"
#include "swl/verification.hpp"
#include "swl/wave_solver.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace swl {

/// Time cutoff: 1 on |t| <= T - delta, 0 on |t| >= T - delta/2, quintic C^2 ramp between.
struct CutoffSpec {
  double T = 1.0;
  double delta = 0.125;

  double value(double t) const;
  double d1(double t) const;
  double d2(double t) const;
};

CutoffSpec build_cutoff(double T, double delta);
Vec sample_cutoff(const CutoffSpec& xi, const Vec& t);

/// Number of worker threads: SWL_THREADS if set and positive, else 1.
int worker_count();

/// Runs body(i) for i in [0, count) on the pool; results are written by index,
/// so the outcome does not depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

struct NamedField {
  std::string name;
  ModeField field;
};

std::vector<NamedField> sample_corpus(const Params& p, const Grids& g, std::uint64_t seed = 0);

/// Solutions of Box_k u = 0 (modes 0 and 1, data at t = -T) multiplied by the
/// time cutoff with delta = T/8.
std::vector<NamedField> solver_corpus(const Params& p, const Grids& g);

/// u = y^k g(t, r): a smooth field on the excluded (Neumann) branch, outside
/// the admissible class; its weighted integrals diverge.
NamedField neumann_branch_field(const Params& p, const Grids& g);

/// kind: standard | solver | neumann | zero.
std::vector<NamedField> build_corpus(const std::string& kind, const Params& p, const Grids& g,
                                     std::uint64_t seed = 0);

struct SweepRecord {
  std::string field;
  Params params;
  double lambda = 0.0;
  std::vector<std::pair<std::string, double>> terms;
  double C0 = 0.0;
  bool pass = false;
  bool divergent = false;
  bool vacuous = false;
};

struct SweepResult {
  std::vector<SweepRecord> records;  ///< field-major, lambda-minor
  /// Per field: smallest lambda from which C0 stays positive and never drops
  /// by more than 10% between successive lambdas.
  std::vector<std::pair<std::string, std::optional<double>>> lambda0;
  std::optional<double> lambda0_overall;
  bool lambda3_exact = true;
  bool any_divergent = false;
  bool all_vacuous = false;
  bool pass = false;
};

SweepResult run_carleman_sweep(const std::vector<NamedField>& corpus, const Params& p,
                               const Grids& g, const std::vector<double>& lambda_grid);

/// Observation-time threshold for the boundary observability inequality.
double observability_threshold(int n, double kappa);

struct ObservabilityOptions {
  int n_r = 400;
  double grading = 1.0;
  int seeds = 10;
  int profiles = 4;
  double cfl = 0.5;
  bool zero_data = false;  ///< all coefficients zero; the records come out vacuous
};

struct ObservabilityRecord {
  Params params;
  double T = 0.0;
  double threshold = 0.0;
  bool clears_threshold = false;
  double boundary_observation = 0.0;  ///< min over seeds of int_Gamma N^2, E1(0) = 1
  double E1_0 = 1.0;
  double ratio = 0.0;                 ///< same minimum, as a ratio
  std::vector<double> seed_ratios;
  double min_generalized_eig = 0.0;   ///< inf over all data in the span
  bool vacuous = false;
};

std::vector<ObservabilityRecord> run_observability(const EquationSpec& spec, const Params& p,
                                                   const std::vector<double>& T_list,
                                                   std::uint64_t data_seed,
                                                   const ObservabilityOptions& opt = {});

struct ExponentFit {
  double exponent = 0.0;
  int rows_used = 0;
};

/// Slope of log|u| against log y on the outermost 10% of the nodes, averaged
/// over rows whose boundary signal clears the noise floor.
ExponentFit fit_boundary_exponent(const Mat& u, const RadialGrid& grid, double noise_floor = 1e-3);
ExponentFit fit_boundary_exponent(const Trajectory& traj, double noise_floor = 1e-3);

/// Samples the solution with data (h0, ht0) at t = -T on exactly the nodes of g.time.
ModeField sample_solution(const ModeOperator& op, const Vec& h0, const Vec& ht0, const Grids& g,
                          double cfl = 0.5);

struct SuiteEntry {
  std::string config;
  IdentityReport report;
};

struct SuiteOptions {
  std::vector<int> n_list{1, 3, 4, 5};
  std::vector<double> kappa_list{-0.1, -0.25, -0.4};
  std::vector<int> refinement{100, 200, 400};
  double T = 1.0;
  double epsilon = 0.1;
  std::vector<double> eps_sequence{0.2, 0.1, 0.05, 0.025};
  std::uint64_t seed = 0;
  double order_min = 1.8;
  double identity_tol = 1e-2;
};

struct SuiteResult {
  std::vector<SuiteEntry> entries;
  bool pass = false;
};

SuiteResult run_identity_suite(const SuiteOptions& opt = {});

}  // namespace swl
