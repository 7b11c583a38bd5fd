#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace swl {

using Vec = Eigen::VectorXd;
/// Spacetime samples: one row per time node, one column per radial node.
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Raised for invalid parameters or inputs; the CLI maps it to exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Params {
  int n = 1;
  double kappa = -0.25;
  double c = 0.0;
  double lambda = 0.0;
  double T = 1.0;
  /// When set, validate() also enforces the weight-curvature constraints on c.
  bool carleman_admissible = false;
};

/// Throws ConfigError when (n, kappa, c, lambda, T) violate the model hypotheses.
void validate(const Params& p);

/// Area of the unit sphere S^{n-1}; 2 for n = 1 (the two points of S^0).
double sphere_area(int n);
/// Volume of the unit ball in R^n.
double ball_volume(int n);

struct RadialGrid {
  int n = 1;
  double grading = 2.0;
  Vec r;  ///< strictly increasing, inside (0, 1)
  Vec y;  ///< 1 - r
  Vec w;  ///< quadrature weights, r^{n-1} and |S^{n-1}| included
  Index size() const { return r.size(); }
};

/// Nodes y_j = (j/(n_r+1))^p, j = 1..n_r, mapped to r = 1 - y and sorted.
RadialGrid build_radial_grid(int n_r, double p, int n);

struct TimeGrid {
  double T = 1.0;
  double dt = 0.0;
  Vec t;  ///< uniform on [-T, T], endpoints included
  Vec w;  ///< trapezoid weights
  Index size() const { return t.size(); }
};

/// n_t intervals, n_t + 1 nodes.
TimeGrid build_time_grid(double T, int n_t);

struct Grids {
  RadialGrid radial;
  TimeGrid time;
};

struct ModeSet {
  int n = 1;
  std::vector<int> ell;
  std::vector<double> eigenvalue;  ///< ell (ell + n - 2)
};

/// Angular eigenvalue of mode ell on S^{n-1}.
double angular_eigenvalue(int ell, int n);

/// Modes 0..ell_max. For n = 1 the only sectors are ell = 0 (even) and 1 (odd).
ModeSet build_mode_set(int n, int ell_max);

/// Result of a quadrature that may meet a non-integrable edge singularity.
struct Integral {
  double value = 0.0;
  bool divergent = false;
  /// Power-law exponent seen at the r = 1 edge (y -> 0); NaN if not estimated.
  double edge_exponent = 0.0;
};

/// Exponents at or below this are treated as non-integrable.
inline constexpr double kDivergenceThreshold = -1.0 + 1e-6;

/// Trapezoid over the nodes plus power-law end cells at r = 0 and r = 1.
/// The end-cell exponent is extrapolated from the outermost three nodes;
/// an exponent <= -1 marks the integral divergent and its value NaN.
Integral integrate_space(const Eigen::Ref<const Vec>& density, const RadialGrid& grid);

/// Time trapezoid of integrate_space applied to each row.
Integral integrate_spacetime(const Eigen::Ref<const Mat>& density, const TimeGrid& tg,
                             const RadialGrid& rg);

/// Cubic Lagrange interpolation weights for evaluating nodal data at r.
struct Probe {
  Index first = 0;
  double w[4] = {0, 0, 0, 0};
  double at(const Eigen::Ref<const Vec>& v) const {
    return w[0] * v(first) + w[1] * v(first + 1) + w[2] * v(first + 2) + w[3] * v(first + 3);
  }
  Vec column(const Eigen::Ref<const Mat>& m) const {
    return w[0] * m.col(first) + w[1] * m.col(first + 1) + w[2] * m.col(first + 2) +
           w[3] * m.col(first + 3);
  }
};
Probe make_probe(const RadialGrid& grid, double r);

/// Integral over the shell a < r < b (both strictly inside the node range),
/// including r^{n-1} and |S^{n-1}|. Partial cells use interpolated end values.
double integrate_shell(const Eigen::Ref<const Vec>& density, const RadialGrid& grid, double a,
                       double b);
double integrate_shell_spacetime(const Eigen::Ref<const Mat>& density, const TimeGrid& tg,
                                 const RadialGrid& rg, double a, double b);

/// Product-integration weights for int_{B_1} W(y) P dV where W is known in
/// closed form and P is nodal data, linearly interpolated between nodes and
/// extrapolated into the two end cells. W is sampled on sub-panels graded in
/// log y, so boundary layers thinner than the first cell are still captured.
/// `edge_exponent` is the power of y that W behaves like as y -> 0.
struct WeightedRule {
  Vec w;
  bool divergent = false;
};
WeightedRule product_weights(const RadialGrid& grid, const std::function<double(double)>& W_of_y,
                             double edge_exponent);

}  // namespace swl
