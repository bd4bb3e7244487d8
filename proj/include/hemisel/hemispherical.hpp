#pragma once

#include "hemisel/spherical_grid.hpp"

namespace hemisel {

/// Options for the truncated-series inverse.
struct InverseOptions {
    /// Optional raised-cosine damping of the frequency index p (off by
    /// default; the plain truncated series is the reference estimator).
    bool damping = false;
};

struct ForwardOptions {
    /// Evaluate by masking nodes with <s,theta> >= 0 (half weight exactly on
    /// the cap boundary) instead of the default multiplier evaluation. The
    /// masked rule is exact on even inputs but its O(h) boundary noise is
    /// amplified by the unbounded inverse; the default projects f on
    /// harmonics (a quadrature on the same grid) and applies the transform's
    /// multipliers, which keeps forward/inverse round trips consistent.
    bool masked = false;
    int band = 0; // multiplier path: max harmonic degree; 0 = grid default
};

/// Hemispherical transform g(s) = integral of f over {theta : <s,theta> >= 0},
/// evaluated by quadrature at every node of f's grid.
SphericalFunction forward(const SphericalFunction& f, const ForwardOptions& options = {});

/// Odd part theta -> (f(theta) - f(-theta)) / 2 via the grid's antipodal
/// pairing; grids without exact closure fall back to nearest-node lookup and
/// set antipodal_fallback on the result.
SphericalFunction odd_part(const SphericalFunction& f);

/// Recover f = 2 f^- 1{f^- > 0} from its odd part; valid when f >= 0 a.e.
/// and f(theta) f(-theta) = 0 a.e. The input must be odd within `tol`
/// (relative to its sup norm).
SphericalFunction reconstruct_from_odd(const SphericalFunction& fm, double tol = 1e-6);

/// Truncated-series inverse of the hemispherical transform:
///
///   f^-(gamma) ~ sum_{p=0}^{T} (1/lambda_{2p+1,d})
///                 int q_{2p+1,d}(gamma.s) g(s) dsigma(s),
///
/// with the integrals evaluated on g's grid and the result sampled at the
/// nodes of gamma_grid. The zonal integrals are computed through the
/// harmonic addition theorem (Fourier sums for d = 2, real spherical
/// harmonics for d = 3), which is numerically identical to the direct
/// double quadrature but O(N) per node instead of O(N^2).
SphericalFunction inverse_series(const SphericalFunction& g, int truncation,
                                 const GridPtr& gamma_grid,
                                 const InverseOptions& options = {});

/// Quadrature value of int_{H+} q_{2p+1,d}(gamma.s) dsigma(s) over the grid's
/// nodes with s_1 >= 0 (half weight exactly on the boundary). Pass a grid
/// from build_hemisphere_grid for spectral accuracy.
double hemisphere_q_integral(int d, int p, const Vec3& gamma, const SphericalGrid& grid);

} // namespace hemisel
