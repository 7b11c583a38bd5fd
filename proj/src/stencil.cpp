#include "swl/stencil.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace swl {

Eigen::MatrixXd fd_weights(double x0, const std::vector<double>& xs, int max_derivative) {
  const int n = static_cast<int>(xs.size());
  const int m = max_derivative;
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m + 1, n);
  double c1 = 1.0;
  double c4 = xs[0] - x0;
  C(0, 0) = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = xs[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = xs[i] - xs[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) {
          C(k, i) = c1 * (k * C(k - 1, i - 1) - c5 * C(k, i - 1)) / c2;
        }
        C(0, i) = -c1 * c5 * C(0, i - 1) / c2;
      }
      for (int k = mn; k >= 1; --k) C(k, j) = (c4 * C(k, j) - k * C(k - 1, j)) / c3;
      C(0, j) = c4 * C(0, j) / c3;
    }
    c1 = c2;
  }
  return C;
}

const GaussRule& gauss_legendre_rule() {
  static const GaussRule rule = [] {
    constexpr int n = 8;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
      const double b = k / std::sqrt(4.0 * k * k - 1.0);
      J(k, k - 1) = J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussRule g;
    for (int k = 0; k < n; ++k) {
      g.x.push_back(es.eigenvalues()(k));
      const double v = es.eigenvectors()(0, k);
      g.w.push_back(2.0 * v * v);
    }
    return g;
  }();
  return rule;
}

RadialDiff build_radial_diff(const RadialGrid& grid, const GhostLaw& ghost, int width) {
  const Index N = grid.size();
  if (width < 3 || width % 2 == 0 || N < width) {
    throw ConfigError("build_radial_diff: need an odd stencil width >= 3 and enough nodes");
  }
  const int half = width / 2;
  RadialDiff D;
  D.width = width;
  D.first.resize(N);
  D.d1.setZero(N, width);
  D.d2.setZero(N, width);

  for (Index j = 0; j < N; ++j) {
    std::vector<double> xs;
    Index lo = j - half;
    if (lo < 0 && ghost) {
      // Mirror points -r_m for the missing indices, folded back onto node m.
      std::vector<Index> owner;
      std::vector<double> factor;
      for (Index k = lo; k <= j + half; ++k) {
        if (k < 0) {
          const Index mnode = -1 - k;
          xs.push_back(-grid.r(mnode));
          owner.push_back(mnode);
          factor.push_back(ghost(grid.r(mnode)));
        } else {
          xs.push_back(grid.r(k));
          owner.push_back(k);
          factor.push_back(1.0);
        }
      }
      const Eigen::MatrixXd C = fd_weights(grid.r(j), xs, 2);
      D.first[j] = 0;
      for (std::size_t a = 0; a < xs.size(); ++a) {
        D.d1(j, owner[a]) += factor[a] * C(1, a);
        D.d2(j, owner[a]) += factor[a] * C(2, a);
      }
      continue;
    }
    lo = std::clamp<Index>(lo, 0, N - width);
    for (Index k = lo; k < lo + width; ++k) xs.push_back(grid.r(k));
    const Eigen::MatrixXd C = fd_weights(grid.r(j), xs, 2);
    D.first[j] = lo;
    D.d1.row(j) = C.row(1);
    D.d2.row(j) = C.row(2);
  }
  return D;
}

Mat RadialDiff::rows(const Eigen::MatrixXd& wts, const Mat& m) const {
  const Index N = static_cast<Index>(first.size());
  Mat out(m.rows(), N);
  for (Index j = 0; j < N; ++j) {
    out.col(j) = m.middleCols(first[j], width) * wts.row(j).transpose();
  }
  return out;
}

Mat RadialDiff::rows1(const Mat& m) const { return rows(d1, m); }
Mat RadialDiff::rows2(const Mat& m) const { return rows(d2, m); }

namespace {

// Five-point stencils on the uniform time grid, shifted one-sided near the ends.
Mat time_derivative(const Mat& m, const TimeGrid& tg, int order) {
  const Index n = m.rows();
  if (n < 5) throw ConfigError("time derivative: need at least 5 time nodes");
  Mat out(n, m.cols());
  for (Index i = 0; i < n; ++i) {
    const Index first = std::clamp<Index>(i - 2, 0, n - 5);
    std::vector<double> xs(5);
    for (int k = 0; k < 5; ++k) xs[k] = static_cast<double>(first + k - i) * tg.dt;
    const Eigen::MatrixXd w = fd_weights(0.0, xs, order);
    out.row(i).setZero();
    for (int k = 0; k < 5; ++k) out.row(i) += w(order, k) * m.row(first + k);
  }
  return out;
}

}  // namespace

Mat time_d1(const Mat& m, const TimeGrid& tg) { return time_derivative(m, tg, 1); }

Mat time_d2(const Mat& m, const TimeGrid& tg) { return time_derivative(m, tg, 2); }

}  // namespace swl
