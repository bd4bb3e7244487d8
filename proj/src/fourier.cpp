#include "hemisel/errors.hpp"
#include "hemisel/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

namespace hemisel {

namespace {

constexpr double kPi = std::numbers::pi;

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

// Fourier transform of the Epanechnikov kernel (3/4)(1-t^2) on [-1,1].
double epan_ft(double w) {
    if (std::abs(w) < 1e-4) return 1.0 - w * w / 10.0;
    return 3.0 * (std::sin(w) - w * std::cos(w)) / (w * w * w);
}

// Transfer function of the local-linear slope estimator (interior, uniform
// design): the estimated derivative of e^{isv} is psi(s h) times the truth.
double slope_transfer(double w) {
    if (std::abs(w) < 1e-3) return 1.0 - w * w / 14.0;
    const double s = std::sin(w), c = std::cos(w);
    return 15.0 * (3.0 * s - 3.0 * w * c - w * w * s) / (w * w * w * w * w);
}

double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 : std::sin(x) / x; }

} // namespace

FourierEstimate fourier_root(const std::vector<double>& y, const std::vector<int>& r,
                             const std::vector<double>& v, const std::vector<double>& zbar,
                             const Phi& phi, const FourierConfig& config) {
    const std::size_t n = y.size();
    if (r.size() != n || v.size() != n || zbar.size() != n || n < 100)
        throw data_error("fourier_root: need aligned y, r, v, zbar with n >= 100");
    if (config.n_s < 3 || config.n_s % 2 == 0)
        throw config_error("fourier_root: n_s must be odd and >= 3");
    if (config.cutoff > config.s_max) {
        throw config_error(
            "fourier_root: frequency grid too small for the change of variables; "
            "need s_max >= cutoff = " +
            std::to_string(config.cutoff));
    }

    std::vector<double> resp(n);
    for (std::size_t i = 0; i < n; ++i) resp[i] = r[i] ? phi(y[i]) : 0.0;

    // regression grids
    double zmax = config.zbar_absmax;
    if (zmax <= 0.0) {
        std::vector<double> az(n);
        for (std::size_t i = 0; i < n; ++i) az[i] = std::abs(zbar[i]);
        zmax = quantile(az, 0.97);
    }
    if (zmax <= 0.0) throw data_error("fourier_root: degenerate zbar sample");
    const std::size_t nz = std::max<std::size_t>(config.n_zbar, 3);
    std::vector<double> zgrid(nz);
    for (std::size_t j = 0; j < nz; ++j)
        zgrid[j] = -zmax + 2.0 * zmax * static_cast<double>(j) / static_cast<double>(nz - 1);

    double vlo = quantile(v, 0.002), vhi = quantile(v, 0.998);
    vlo -= config.v_pad;
    vhi += config.v_pad;
    const std::size_t nv = std::max<std::size_t>(config.n_v, 8);
    const double dv = (vhi - vlo) / static_cast<double>(nv - 1);
    std::vector<double> vgrid(nv);
    for (std::size_t g = 0; g < nv; ++g) vgrid[g] = vlo + dv * static_cast<double>(g);

    // step 1: a_hat(v, zbar) = d/dv E[phi(Y) R | V = v, ZBar = zbar]
    // derivative estimation wants explicit bandwidths; the fallback is a
    // Silverman-style rule with the slower n^{-1/7} rate
    LocalPoly2dConfig lp = config.lp;
    if (lp.bandwidth_x <= 0.0) {
        double mean = 0.0, var = 0.0;
        for (double vi : v) mean += vi;
        mean /= static_cast<double>(n);
        for (double vi : v) var += (vi - mean) * (vi - mean);
        lp.bandwidth_x =
            1.06 * std::sqrt(var / static_cast<double>(n - 1)) *
            std::pow(static_cast<double>(n), -1.0 / 7.0);
    }
    if (lp.bandwidth_z <= 0.0)
        lp.bandwidth_z = 0.7 * zmax * std::pow(static_cast<double>(n), -1.0 / 7.0);
    std::vector<double> eval_v, eval_z;
    eval_v.reserve(nv * nz);
    eval_z.reserve(nv * nz);
    for (std::size_t j = 0; j < nz; ++j)
        for (std::size_t g = 0; g < nv; ++g) {
            eval_v.push_back(vgrid[g]);
            eval_z.push_back(zgrid[j]);
        }
    std::vector<double> fit_values, a_hat;
    local_linear_2d(v, zbar, resp, eval_v, eval_z, lp, fit_values, a_hat);

    // step 2: b_hat(s, zbar) = int e^{isv} a_hat(v, zbar) dv (trapezoid)
    const std::size_t ns = config.n_s;
    std::vector<double> sgrid(ns);
    for (std::size_t k = 0; k < ns; ++k)
        sgrid[k] = -config.s_max +
                   2.0 * config.s_max * static_cast<double>(k) / static_cast<double>(ns - 1);
    // b_hat(s, zbar) = int e^{isv} a_hat(v, zbar) dv, by two routes whose
    // noises are nearly orthogonal (value and slope of the same local fit):
    //   parts: e^{isv} m_hat(v) |_lo^hi - is int e^{isv} m_hat(v) dv
    //          (noise sd proportional to |s|, best at low frequencies),
    //   slope: int e^{isv} a_hat(v) dv (flat noise, best at high frequencies),
    // combined with the inverse-variance weight; the variance ratio of the
    // Epanechnikov local-linear value and slope estimates is
    // R(K0*)/R(K1*) h^2 = (7/25) h^2.
    std::vector<std::complex<double>> b(ns * nz);
    for (std::size_t k = 0; k < ns; ++k) {
        const double s = sgrid[k];
        // undo the known attenuations (kernel smoothing and the
        // piecewise-linear quadrature act as low-pass filters)
        const double quad_att = sinc(0.5 * s * dv) * sinc(0.5 * s * dv);
        const double att_val = std::max(0.2, epan_ft(s * lp.bandwidth_x) * quad_att);
        const double att_slp = std::max(0.2, slope_transfer(s * lp.bandwidth_x) * quad_att);
        const double wp = s * lp.bandwidth_x;
        const double slope_share = wp * wp * (7.0 / 25.0) / (1.0 + wp * wp * (7.0 / 25.0));
        for (std::size_t j = 0; j < nz; ++j) {
            std::complex<double> acc_m(0.0, 0.0), acc_a(0.0, 0.0);
            for (std::size_t g = 0; g < nv; ++g) {
                const double w = (g == 0 || g == nv - 1) ? 0.5 : 1.0;
                const std::complex<double> e(std::cos(s * vgrid[g]), std::sin(s * vgrid[g]));
                acc_m += w * fit_values[j * nv + g] * e;
                acc_a += w * a_hat[j * nv + g] * e;
            }
            const std::complex<double> e_hi(std::cos(s * vhi), std::sin(s * vhi));
            const std::complex<double> e_lo(std::cos(s * vlo), std::sin(s * vlo));
            const std::complex<double> boundary =
                e_hi * fit_values[j * nv + (nv - 1)] - e_lo * fit_values[j * nv + 0];
            const std::complex<double> b_parts =
                boundary - std::complex<double>(0.0, s) * acc_m * dv / att_val;
            const std::complex<double> b_slope = acc_a * dv / att_slp;
            b[k * nz + j] = (1.0 - slope_share) * b_parts + slope_share * b_slope;
        }
    }

    auto b_interp_z = [&](std::size_t k, double zq) {
        const double pos = (zq + zmax) / (2.0 * zmax) * static_cast<double>(nz - 1);
        const std::size_t lo =
            std::min(static_cast<std::size_t>(std::max(0.0, pos)), nz - 2);
        const double frac = std::clamp(pos - static_cast<double>(lo), 0.0, 1.0);
        return b[k * nz + lo] * (1.0 - frac) + b[k * nz + lo + 1] * frac;
    };
    // bilinear in (s, zbar)
    auto b_interp = [&](double sq, double zq) {
        const double pos =
            (sq + config.s_max) / (2.0 * config.s_max) * static_cast<double>(ns - 1);
        const std::size_t lo =
            std::min(static_cast<std::size_t>(std::max(0.0, pos)), ns - 2);
        const double frac = std::clamp(pos - static_cast<double>(lo), 0.0, 1.0);
        return b_interp_z(lo, zq) * (1.0 - frac) + b_interp_z(lo + 1, zq) * frac;
    };

    // step 3: change of variables B(s, zeta) = b(s, zeta / s); the double
    // wedge |zeta| > zmax |s| around the zeta axis is not identified from the
    // data cone and is filled by linear interpolation in s between the two
    // cone edges (the characteristic function is smooth across the wedge).
    const std::size_t nzeta = ns;
    std::vector<double> zeta_grid = sgrid;
    std::vector<std::complex<double>> big(ns * nzeta);
    const double ds = sgrid[1] - sgrid[0];
    for (std::size_t k = 0; k < ns; ++k) {
        const double s = sgrid[k];
        for (std::size_t q = 0; q < nzeta; ++q) {
            const double zeta = zeta_grid[q];
            std::complex<double> val;
            if (std::abs(zeta) <= std::abs(s) * zmax) {
                if (std::abs(s) < 0.5 * ds) {
                    val = b_interp_z(ns / 2, 0.0); // s = 0 column, zeta = 0
                } else {
                    val = b_interp_z(k, zeta / s);
                }
            } else {
                const double s0 = std::abs(zeta) / zmax; // cone edge
                if (s0 > config.s_max) {
                    val = {0.0, 0.0};
                } else {
                    const std::complex<double> right = b_interp(s0, zeta / s0);
                    const std::complex<double> left = b_interp(-s0, -zeta / s0);
                    const double frac = (s + s0) / (2.0 * s0);
                    val = left * (1.0 - frac) + right * frac;
                }
            }
            big[k * nzeta + q] = val;
        }
    }

    // step 4: smoothed 2-d inverse transform with the raised-cosine low-pass
    FourierEstimate est;
    est.cutoff = config.cutoff;
    est.zbar_grid = zgrid;
    est.s0_slice_by_zbar.resize(nz);
    for (std::size_t j = 0; j < nz; ++j)
        est.s0_slice_by_zbar[j] = b[(ns / 2) * nz + j].real();

    est.theta_grid.resize(config.n_theta);
    for (std::size_t a = 0; a < config.n_theta; ++a)
        est.theta_grid[a] = config.theta_lo + (config.theta_hi - config.theta_lo) *
                                                  static_cast<double>(a) /
                                                  static_cast<double>(config.n_theta - 1);
    est.gbar_grid.resize(config.n_gbar);
    for (std::size_t bb = 0; bb < config.n_gbar; ++bb)
        est.gbar_grid[bb] = config.gbar_lo + (config.gbar_hi - config.gbar_lo) *
                                                 static_cast<double>(bb) /
                                                 static_cast<double>(config.n_gbar - 1);

    const double dzeta = ds;
    const double beta = std::clamp(config.rolloff, 1e-6, 1.0);
    const double flat = (1.0 - beta) * config.cutoff;
    std::vector<double> wre(ns * nzeta), wim(ns * nzeta);
    for (std::size_t k = 0; k < ns; ++k) {
        for (std::size_t q = 0; q < nzeta; ++q) {
            const double rad = std::hypot(sgrid[k], zeta_grid[q]);
            double w = 0.0;
            if (rad <= flat)
                w = 1.0;
            else if (rad <= config.cutoff)
                w = 0.5 * (1.0 + std::cos(kPi * (rad - flat) / (config.cutoff - flat)));
            wre[k * nzeta + q] = w * big[k * nzeta + q].real();
            wim[k * nzeta + q] = w * big[k * nzeta + q].imag();
        }
    }

    est.values.assign(config.n_theta * config.n_gbar, 0.0);
    const double scale = ds * dzeta / (4.0 * kPi * kPi);
    // cos(s theta + zeta g) expanded through per-axis tables
    std::vector<double> cs(config.n_theta * ns), ss(config.n_theta * ns);
    for (std::size_t a = 0; a < config.n_theta; ++a)
        for (std::size_t k = 0; k < ns; ++k) {
            cs[a * ns + k] = std::cos(sgrid[k] * est.theta_grid[a]);
            ss[a * ns + k] = std::sin(sgrid[k] * est.theta_grid[a]);
        }
    std::vector<double> cz(config.n_gbar * nzeta), sz(config.n_gbar * nzeta);
    for (std::size_t bb = 0; bb < config.n_gbar; ++bb)
        for (std::size_t q = 0; q < nzeta; ++q) {
            cz[bb * nzeta + q] = std::cos(zeta_grid[q] * est.gbar_grid[bb]);
            sz[bb * nzeta + q] = std::sin(zeta_grid[q] * est.gbar_grid[bb]);
        }
    // smoothing in zbar is a zeta-convolution with width |s| h_z at each s,
    // i.e. a multiplication by epan_ft(|s| h_z gbar) in the output; undo it
    std::vector<double> zcorr(config.n_gbar * ns);
    for (std::size_t bb = 0; bb < config.n_gbar; ++bb)
        for (std::size_t k = 0; k < ns; ++k)
            zcorr[bb * ns + k] =
                1.0 / std::clamp(epan_ft(std::abs(sgrid[k]) * lp.bandwidth_z *
                                         est.gbar_grid[bb]),
                                 0.25, 1.0);
    double imag2 = 0.0, val2 = 0.0;
    for (std::size_t a = 0; a < config.n_theta; ++a) {
        for (std::size_t bb = 0; bb < config.n_gbar; ++bb) {
            double re = 0.0, im = 0.0;
            for (std::size_t k = 0; k < ns; ++k) {
                const double ck = cs[a * ns + k], sk = ss[a * ns + k];
                double re_c = 0.0, re_s = 0.0, im_c = 0.0, im_s = 0.0;
                for (std::size_t q = 0; q < nzeta; ++q) {
                    const std::size_t idx = k * nzeta + q;
                    const double cq = cz[bb * nzeta + q], sq = sz[bb * nzeta + q];
                    // cos(ang) = ck cq - sk sq, sin(ang) = sk cq + ck sq
                    re_c += wre[idx] * cq;
                    re_s += wre[idx] * sq;
                    im_c += wim[idx] * cq;
                    im_s += wim[idx] * sq;
                }
                const double corr = zcorr[bb * ns + k];
                re += corr * (ck * re_c - sk * re_s + sk * im_c + ck * im_s);
                im += corr * (ck * im_c - sk * im_s - sk * re_c - ck * re_s);
            }
            est.values[a * config.n_gbar + bb] = scale * re;
            imag2 += (scale * im) * (scale * im);
            val2 += (scale * re) * (scale * re);
        }
    }
    est.imag_residual = val2 > 0.0 ? std::sqrt(imag2 / val2) : 0.0;
    return est;
}

} // namespace hemisel
