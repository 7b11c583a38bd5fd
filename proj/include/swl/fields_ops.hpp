#pragma once

#include "swl/domain_grid.hpp"
#include "swl/stencil.hpp"

namespace swl {

/// One angular mode of a field, stored as the detwisted unknown h = y^{kappa-1} u.
struct ModeField {
  int ell = 0;
  Mat h;  ///< time x radius
};

struct GradientBundle {
  Mat dt_u;
  Mat Dr_u;
  Mat angular_sq;  ///< ell (ell + n - 2) r^{-2} u^2
};

/// Mirror law for u of mode ell: u(-r) = (-1)^ell u(r).
GhostLaw u_ghost(int ell);
/// The same law expressed for h = y^{kappa-1} u, with y(-r) = 1 + r.
GhostLaw h_ghost(int ell, double kappa);

Mat u_from_h(const ModeField& field, const RadialGrid& grid, const Params& p);
ModeField h_from_u(int ell, const Mat& u, const RadialGrid& grid, const Params& p);

/// D_r u = y^{1-kappa} d_r h - (1 - 2 kappa) y^{-kappa} h; dt_u by centred differences.
GradientBundle apply_D(const ModeField& field, const Grids& g, const Params& p);

/// Dbar_r u = d_r u - (kappa / y) u on u-samples of mode ell.
Mat apply_Dbar_r(const Mat& u, int ell, const Grids& g, const Params& p);

/// Box_kappa u via the h-representation, where the inverse-square term cancels.
Mat apply_box_kappa(const ModeField& field, const Grids& g, const Params& p);

/// Box_y u = Box_kappa u + (n - 1) kappa (r y)^{-1} u.
Mat apply_box_y(const ModeField& field, const Grids& g, const Params& p);

/// Box_kappa u computed directly from u-samples with the untransformed formula.
/// Accurate only away from y = 0; used as a cross-check.
Mat apply_box_kappa_direct(const Mat& u, int ell, const Grids& g, const Params& p);

/// Broadcast a radial profile over all time rows.
inline Mat broadcast_rows(const Vec& radial, Index rows) {
  return radial.transpose().replicate(rows, 1);
}

}  // namespace swl
