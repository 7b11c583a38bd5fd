#pragma once

#include "swl/fields_ops.hpp"

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace swl {

using SpaceTimeFn = std::function<double(double t, double r)>;

/// Lower-order terms of Box_k u = X_t d_t u + X_r D_r u + V u + forcing.
/// Empty functions stand for zero. `forcing` is given at the level of h.
struct EquationSpec {
  SpaceTimeFn X_t, X_r, V, forcing;
  bool time_dependent = false;  ///< X and V depend on t
  double C_V_max = 1e3;         ///< admissible constant in |V| <= C_V (1/y + (n-1)/r)

  // Filled by validate().
  double X_sup = 0.0;
  double C_V = 0.0;
};

/// Samples X and V on the grid over [t0, t1]; throws ConfigError when |X| is
/// unbounded or |V| exceeds C_V_max (1/y + (n-1)/r).
void validate(EquationSpec& spec, const RadialGrid& grid, const Params& p, double t0, double t1);

/// X = (0.1, 0.05 sin r), V = 0.2 min(1/y, 1/r).
EquationSpec demo_equation();
/// V = -(n-1) kappa / (r y): the resulting equation is Box_y u = 0.
EquationSpec twisted_equation(const Params& p);

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Finite-volume form of the radial h-equation
///   h_tt = rho^{-1} (rho h_r)_r - q h - X_t h_t - X_r h_r + P h + forcing,
/// rho = r^{n-1} y^{2-2k}, q = (1-k)(n-1)/(r y) + mu / r^2,
/// P = X_r (1-2k)/y - V. rho vanishes at r = 1, which is the Frobenius closure.
struct ModeOperator {
  int ell = 0;
  double mu = 0.0;
  Params params;
  RadialGrid grid;
  Vec r, y;
  Vec mass;     ///< int rho over the dual cell of each node
  Vec face;     ///< coupling rho(face)/(r_{j+1} - r_j), size N-1
  Vec diag;     ///< -int q rho (plus the r = 0 flux term) over each cell
  Vec xt, xr, pot;  ///< cell averages of X_t, X_r and P (static specs)
  bool has_lower_order = false;
  bool time_dependent = false;
  Eigen::MatrixXd d1;  ///< N x 3 nodal first-derivative weights
  std::vector<Index> d1_first;
  double closure_w[3] = {0, 0, 0};  ///< d_r at r = 1 from (h(1), h_{N-1}, h_{N-2})
  EquationSpec spec;  ///< copy, so the operator owns its coefficients

  /// Spatial part applied to the columns of H (N x K) at time t.
  Mat apply(const Mat& H, double t) const;
  /// X_t at the nodes and time t.
  Vec damping(double t) const;
  /// h(1) per column from the Robin closure h_r(1) = beta(t) h(1).
  Eigen::RowVectorXd boundary_values(const Mat& H, double t) const;
  double closure_beta(double t) const;
  /// Largest eigenvalue of -M^{-1} K for the symmetric part (power iteration).
  double spectral_radius() const;
};

ModeOperator assemble_mode_operator(int ell, const EquationSpec& spec, const Params& p,
                                    const RadialGrid& grid);

enum class Scheme { Leapfrog, RK4 };

struct SolveOptions {
  Scheme scheme = Scheme::Leapfrog;
  double cfl = 0.5;
  double dt = 0.0;          ///< 0 selects cfl * min spacing
  int snapshot_stride = 0;  ///< 0 selects about 200 snapshots
  /// Called at every time level with the state (N x K).
  std::function<void(double t, const Mat& H)> observer;
};

struct Trajectory {
  int ell = 0;
  Params params;
  RadialGrid grid;
  std::string scheme;
  double dt = 0.0;
  double cfl = 0.0;
  Vec t;           ///< snapshot times
  Mat h, ht, htt;  ///< snapshot x radius
  Vec h_boundary;  ///< h(t, 1) from the closure
};

/// Evolves (h, h_t) from t0 to t1 (t1 < t0 runs backwards) for one column.
Trajectory solve_ivp(const ModeOperator& op, const Vec& h0, const Vec& ht0, double t0, double t1,
                     const SolveOptions& opt = {});

/// The same time loop for K columns at once; returns the final (h, h_t).
std::pair<Mat, Mat> evolve_batch(const ModeOperator& op, const Mat& H0, const Mat& Ht0, double t0,
                                 double t1, const SolveOptions& opt = {});

/// Default step: cfl * min(min_j (r_{j+1} - r_j), 1 - r_{N-1}).
double default_dt(const RadialGrid& grid, double cfl);

struct EnergyRecord {
  Vec t;
  Vec E1;           ///< int u_t^2 + (D_r u)^2 + |angular u|^2 + u^2
  Vec E2;
  Vec E_conserved;  ///< E1 without the u^2 term
  Vec E_kappa;      ///< int u_t^2 + |grad u|^2 - k(1-k) u^2 / y^2
};

EnergyRecord energies(const Trajectory& traj);

/// E1 as a bilinear form on columns of (h, h_t) data of mode ell: K x K.
Mat e1_gram(int ell, const Params& p, const RadialGrid& grid, const Mat& H, const Mat& Ht);

struct TraceData {
  Vec t;
  Vec neumann;
  Vec dirichlet;
};

TraceData extract_traces(const Trajectory& traj);

struct GronwallFit {
  double M = 0.0;
  bool pass = false;
};

/// M = max over snapshot pairs of log(E(t1)/E(t0)) / |t1 - t0|, forward in time.
GronwallFit gronwall_fit(const Vec& t, const Vec& energy, double tolerance = 1e-2);
inline GronwallFit gronwall_fit(const EnergyRecord& rec, double tolerance = 1e-2) {
  return gronwall_fit(rec.t, rec.E1, tolerance);
}

}  // namespace swl
