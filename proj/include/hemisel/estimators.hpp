#pragma once

#include "hemisel/local_poly.hpp"
#include "hemisel/spherical_grid.hpp"

#include <functional>
#include <string>
#include <vector>

namespace hemisel {

using Phi = std::function<double(double)>;

/// Kernel regression of R on Z (product Epanechnikov), clipped to [0, 1].
std::vector<double> estimate_propensity(const std::vector<int>& r,
                                        const std::vector<std::vector<double>>& z,
                                        const std::vector<std::vector<double>>& eval,
                                        double bandwidth = 0.0);

struct MeanIntegralConfig {
    LocalPolyConfig lp{};        // bandwidth for the regression on p_hat
    double propensity_bandwidth = 0.0;
    std::size_t grid_size = 101; // interior grid for the slope integral
    double boundary_margin = 0.02;
    bool endpoint_route = false; // m_hat(1) instead of the slope integral
};

struct MeanIntegralResult {
    double estimate = 0.0;
    bool at_infinity_unreliable = false; // support of p_hat misses 1
    double p_max = 0.0;
    double p_min = 1.0;
};

/// E[phi(Y)] for the scalar-threshold model: regress phi(Y)R on the
/// estimated propensity p_hat = pi_hat(Z), integrate the local slope over an
/// interior grid and extend by the endpoint values (m(0) = 0).
MeanIntegralResult mean_by_integral(const std::vector<double>& y, const std::vector<int>& r,
                                    const std::vector<std::vector<double>>& z, const Phi& phi,
                                    const MeanIntegralConfig& config = {});

/// Same, but on precomputed propensities.
MeanIntegralResult mean_by_integral_on_p(const std::vector<double>& y,
                                         const std::vector<int>& r,
                                         const std::vector<double>& p_hat, const Phi& phi,
                                         const MeanIntegralConfig& config = {});

/// Local instrumental variable curve d/dp E[phi(Y)R | pi(Z) = p] on a grid.
std::vector<double> local_iv_curve(const std::vector<double>& y, const std::vector<int>& r,
                                   const std::vector<double>& p_hat, const Phi& phi,
                                   const std::vector<double>& p_grid,
                                   const LocalPolyConfig& lp = {});

struct BoundaryMeanConfig {
    double bandwidth = 0.0;      // geodesic radius; <= 0: rule of thumb
    std::size_t min_points = 30; // per side
};

struct BoundaryMeanResult {
    double estimate = 0.0;
    double limit_pos = 0.0; // one-sided limit at +s_tilde
    double limit_neg = 0.0; // one-sided limit at -s_tilde
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
};

/// E[phi(Y)] for the random-coefficients model: sum of the two one-sided
/// boundary limits of the regression of phi(Y)R on S at +-s_tilde, where
/// s_tilde lies on the boundary of H+ (first coordinate 0).
BoundaryMeanResult mean_at_boundary(const std::vector<double>& y, const std::vector<int>& r,
                                    const std::vector<std::vector<double>>& s_points,
                                    const Phi& phi, const Vec3& s_tilde,
                                    const BoundaryMeanConfig& config = {});

/// von Mises-Fisher kernel density estimate for directional data supported
/// on the half-sphere H+, boundary-corrected (each kernel is normalized over
/// H+) and renormalized to integrate to 1 on the grid. kappa = 1/bandwidth^2.
SphericalFunction directional_density(const std::vector<std::vector<double>>& s_points,
                                      double bandwidth, const GridPtr& grid);

/// Interpolate a grid function at an arbitrary unit vector (linear in angle
/// for d = 2; bilinear in (s1, azimuth) on d = 3 product grids).
double eval_spherical(const SphericalFunction& f, const Vec3& point);

struct SeriesConfig {
    double density_bandwidth = 0.0;    // for f_S; <= 0: rule of thumb
    double density_floor_ratio = 1e-3; // floor = ratio * max f_hat
    int hemisphere_quadrature = 64;    // resolution of the H+ rule
    GridPtr density_grid;              // optional preset grid for f_S
};

struct SeriesEstimate {
    GridPtr gamma_grid;
    std::vector<std::vector<double>> coefficients; // [p][node]
    SphericalFunction root_odd;                    // sum_p c_{2p+1}/lambda_{2p+1}
    SphericalFunction root;                        // reconstruct_from_odd applied
    std::size_t dropped = 0;                       // samples under the density floor
    bool drop_warning = false;                     // > 5% dropped
};

/// Coefficients c_{2p+1}(gamma) and the truncated-series root estimate of
/// (E[phi(Y)|Gamma=gamma] f_Gamma(gamma))^-:
///   c_{2p+1}(gamma) = (2/n) sum_i q_{2p+1,d}(gamma.S_i) phi(Y_i) R_i / f_S(S_i)
///                     - mean_estimate * int_{H+} q_{2p+1,d}(gamma.s) dsigma(s).
SeriesEstimate series_coefficients(const std::vector<double>& y, const std::vector<int>& r,
                                   const std::vector<std::vector<double>>& s_points,
                                   const Phi& phi, const GridPtr& gamma_grid, int truncation,
                                   double mean_estimate, const SeriesConfig& config = {});

enum class CdfMethod { scalar_threshold, boundary };

struct CdfConfig {
    MeanIntegralConfig mean{};
    BoundaryMeanConfig boundary{};
    Vec3 s_tilde{0.0, 1.0, 0.0}; // boundary point for the boundary route
    double min_nonresponse = 0.01;
};

struct CdfEstimate {
    std::vector<double> t_grid;
    std::vector<double> values; // nondecreasing, within [0,1]
    double p_r0 = 0.0;          // estimated nonresponse share
};

/// Conditional CDF of the outcome given nonresponse,
///   F(t | R=0) = (E[1{Y<=t}] - E[1{Y<=t} R]) / P(R=0),
/// with E[1{Y<=t}] from mean_by_integral (scalar route) or mean_at_boundary
/// (random-coefficients route), projected to a proper CDF by isotonic
/// regression and clipping.
CdfEstimate nonrespondent_cdf(const std::vector<double>& y, const std::vector<int>& r,
                              const std::vector<std::vector<double>>& z_or_s,
                              const std::vector<double>& t_grid, CdfMethod method,
                              const CdfConfig& config = {});

struct FourierConfig {
    LocalPoly2dConfig lp{};
    std::size_t n_v = 192;     // regression grid in v
    std::size_t n_zbar = 33;   // regression grid in zbar
    double zbar_absmax = 0.0;  // <= 0: 0.97 quantile of |zbar|
    double v_pad = 0.0;        // extra padding of the v range
    std::size_t n_s = 129;     // frequency grid in s (odd, symmetric)
    double s_max = 6.0;
    double cutoff = 4.0;       // raised-cosine radius in (s, zeta)
    double rolloff = 0.5;      // taper fraction: flat to (1-rolloff)*cutoff
    std::size_t n_theta = 64;
    std::size_t n_gbar = 64;
    double theta_lo = -4.0, theta_hi = 4.0;
    double gbar_lo = -4.0, gbar_hi = 4.0;
};

struct FourierEstimate {
    std::vector<double> theta_grid;
    std::vector<double> gbar_grid;
    std::vector<double> values; // row-major [theta][gbar]
    double cutoff = 0.0;
    std::vector<double> s0_slice_by_zbar; // b_hat(0, zbar): flat under the model
    std::vector<double> zbar_grid;
    double imag_residual = 0.0;
};

/// Root E[phi(Y)|Theta=theta, GammaBar=gbar] f_{Theta,GammaBar}(theta,gbar)
/// by Fourier deconvolution: local-poly derivative in v, Fourier transform
/// per zbar, change of variables (s, s*zbar) -> (s, zeta) by interpolation,
/// then a smoothed 2-d inverse transform (raised-cosine low-pass).
FourierEstimate fourier_root(const std::vector<double>& y, const std::vector<int>& r,
                             const std::vector<double>& v, const std::vector<double>& zbar,
                             const Phi& phi, const FourierConfig& config = {});

/// Pool-adjacent-violators projection onto nondecreasing sequences.
std::vector<double> isotonic(const std::vector<double>& values);

} // namespace hemisel
