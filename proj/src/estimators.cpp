#include "hemisel/estimators.hpp"

#include "hemisel/errors.hpp"
#include "hemisel/gegenbauer.hpp"
#include "hemisel/hemispherical.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace hemisel {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<std::size_t> sorted_order(const std::vector<double>& key1,
                                      const std::vector<double>& key2,
                                      const std::vector<double>& key3) {
    std::vector<std::size_t> order(key1.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (key1[a] != key1[b]) return key1[a] < key1[b];
        if (key2[a] != key2[b]) return key2[a] < key2[b];
        return key3[a] < key3[b];
    });
    return order;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

} // namespace

std::vector<double> estimate_propensity(const std::vector<int>& r,
                                        const std::vector<std::vector<double>>& z,
                                        const std::vector<std::vector<double>>& eval,
                                        double bandwidth) {
    const std::size_t n = r.size();
    if (z.size() != n || n == 0) throw data_error("estimate_propensity: size mismatch");
    const std::size_t dz = z[0].size();

    std::vector<double> out(eval.size(), 0.0);
    if (dz == 1) {
        std::vector<double> zs(n), rs(n);
        for (std::size_t i = 0; i < n; ++i) zs[i] = z[i][0];
        std::vector<std::size_t> order = sorted_order(zs, std::vector<double>(n, 0.0),
                                                      std::vector<double>(n, 0.0));
        std::vector<double> zsort(n), rsort(n);
        for (std::size_t i = 0; i < n; ++i) {
            zsort[i] = zs[order[i]];
            rsort[i] = static_cast<double>(r[order[i]]);
        }
        const double h = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(zsort);
        std::vector<double> pts(eval.size());
        for (std::size_t g = 0; g < eval.size(); ++g) pts[g] = eval[g][0];
        out = nw_regression_sorted(zsort, rsort, pts, h);
    } else {
        // product Epanechnikov, direct evaluation
        std::vector<double> h(dz, bandwidth);
        if (bandwidth <= 0.0) {
            for (std::size_t j = 0; j < dz; ++j) {
                std::vector<double> col(n);
                for (std::size_t i = 0; i < n; ++i) col[i] = z[i][j];
                h[j] = silverman_bandwidth(col);
            }
        }
        for (std::size_t g = 0; g < eval.size(); ++g) {
            double num = 0.0, den = 0.0;
            double mult = 1.0;
            for (int attempt = 0; attempt < 40; ++attempt) {
                num = den = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double w = 1.0;
                    for (std::size_t j = 0; j < dz; ++j) {
                        const double u = (z[i][j] - eval[g][j]) / (h[j] * mult);
                        w *= std::max(0.0, 1.0 - u * u);
                    }
                    den += w;
                    num += w * r[i];
                }
                if (den > 1e-12) break;
                mult *= 2.0;
            }
            out[g] = den > 0.0 ? num / den : 0.0;
        }
    }
    for (double& p : out) p = std::clamp(p, 0.0, 1.0);
    return out;
}

namespace {

std::vector<double> propensity_at_samples(const std::vector<int>& r,
                                          const std::vector<std::vector<double>>& z,
                                          double bandwidth) {
    return estimate_propensity(r, z, z, bandwidth);
}

double mean_integral_default_bandwidth(const std::vector<double>& p, std::size_t n) {
    double mean = 0.0;
    for (double v : p) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : p) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n > 1 ? n - 1 : 1);
    const double sd = std::sqrt(var);
    return std::clamp(3.0 * sd * std::pow(static_cast<double>(n), -1.0 / 7.0), 0.05, 0.30);
}

} // namespace

namespace {

// Functional weights of the slope-integral (or endpoint) estimator of
// E[phi(Y)]; omega is aligned with p_hat.
std::vector<double> mean_integral_weights(const std::vector<double>& p_hat,
                                          const MeanIntegralConfig& config) {
    const std::size_t n = p_hat.size();
    std::vector<double> p = p_hat;
    std::sort(p.begin(), p.end());

    LocalPolyConfig lp = config.lp;
    if (lp.bandwidth <= 0.0) lp.bandwidth = mean_integral_default_bandwidth(p, n);

    std::vector<double> evals, vcoef, dcoef;
    if (config.endpoint_route) {
        evals = {1.0};
        vcoef = {1.0};
        dcoef = {0.0};
    } else {
        const double p_lo = std::max(config.boundary_margin, quantile_sorted(p, 0.005));
        const double p_hi =
            std::max(p_lo + 1e-6, std::min(1.0 - config.boundary_margin,
                                           quantile_sorted(p, 0.995)));
        const std::size_t k = std::max<std::size_t>(config.grid_size, 3);
        const double step = (p_hi - p_lo) / static_cast<double>(k - 1);
        for (std::size_t g = 0; g < k; ++g) {
            evals.push_back(p_lo + step * static_cast<double>(g));
            vcoef.push_back(0.0);
            dcoef.push_back((g == 0 || g == k - 1) ? 0.5 * step : step);
        }
        // endpoint extensions: [0, p_lo] uses m(0) = 0, [p_hi, 1] uses m_hat(1)
        evals.push_back(p_lo);
        vcoef.push_back(1.0);
        dcoef.push_back(0.0);
        evals.push_back(p_hi);
        vcoef.push_back(-1.0);
        dcoef.push_back(0.0);
        evals.push_back(1.0);
        vcoef.push_back(1.0);
        dcoef.push_back(0.0);
    }
    return local_linear_functional_weights(p_hat, evals, vcoef, dcoef, lp);
}

} // namespace

MeanIntegralResult mean_by_integral_on_p(const std::vector<double>& y,
                                         const std::vector<int>& r,
                                         const std::vector<double>& p_hat, const Phi& phi,
                                         const MeanIntegralConfig& config) {
    const std::size_t n = y.size();
    if (r.size() != n || p_hat.size() != n || n < 10)
        throw data_error("mean_by_integral: need aligned y, r, p_hat with n >= 10");

    MeanIntegralResult res;
    res.p_min = *std::min_element(p_hat.begin(), p_hat.end());
    res.p_max = *std::max_element(p_hat.begin(), p_hat.end());
    res.at_infinity_unreliable = res.p_max < 1.0 - config.boundary_margin;

    const auto omega = mean_integral_weights(p_hat, config);

    // accumulate in canonical order (permutation invariance, exact)
    std::vector<double> rs(n);
    for (std::size_t i = 0; i < n; ++i) rs[i] = static_cast<double>(r[i]);
    const auto order = sorted_order(p_hat, y, rs);
    double acc = 0.0;
    for (std::size_t idx : order)
        acc += omega[idx] * (r[idx] ? phi(y[idx]) : 0.0);
    res.estimate = acc;
    return res;
}

MeanIntegralResult mean_by_integral(const std::vector<double>& y, const std::vector<int>& r,
                                    const std::vector<std::vector<double>>& z, const Phi& phi,
                                    const MeanIntegralConfig& config) {
    const auto p = propensity_at_samples(r, z, config.propensity_bandwidth);
    return mean_by_integral_on_p(y, r, p, phi, config);
}

std::vector<double> local_iv_curve(const std::vector<double>& y, const std::vector<int>& r,
                                   const std::vector<double>& p_hat, const Phi& phi,
                                   const std::vector<double>& p_grid,
                                   const LocalPolyConfig& lp) {
    const std::size_t n = y.size();
    std::vector<double> resp(n);
    for (std::size_t i = 0; i < n; ++i) resp[i] = r[i] ? phi(y[i]) : 0.0;
    LocalPolyConfig cfg = lp;
    cfg.degree = 1;
    if (cfg.bandwidth <= 0.0) cfg.bandwidth = mean_integral_default_bandwidth(p_hat, n);
    const auto fit = local_poly(p_hat, resp, p_grid, cfg);
    return fit.derivatives;
}

namespace {

// Linear weights nu such that the boundary-limit estimate at +-s_tilde is
// sum_i nu_i resp_i; shared by mean_at_boundary and the CDF sweep.
struct BoundaryWeights {
    std::vector<double> nu; // aligned with samples
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
};

BoundaryWeights boundary_weights(const std::vector<std::vector<double>>& s_points,
                                 const Vec3& s_tilde, const BoundaryMeanConfig& config) {
    const std::size_t n = s_points.size();
    if (n == 0) throw data_error("mean_at_boundary: empty sample");
    const std::size_t d = s_points[0].size();
    if (d != 2 && d != 3) throw capability_error("mean_at_boundary: only d in {2,3}");
    if (std::abs(s_tilde[0]) > 1e-8)
        throw std::domain_error("mean_at_boundary: s_tilde must be on the boundary (s_1 = 0)");

    double h = config.bandwidth;
    if (h <= 0.0) h = 2.0 * std::pow(static_cast<double>(n), -0.2);

    BoundaryWeights bw;
    bw.nu.assign(n, 0.0);

    for (int side = 0; side < 2; ++side) {
        const double sign = side == 0 ? 1.0 : -1.0;
        const Vec3 target{0.0, sign * s_tilde[1], sign * s_tilde[2]};
        std::size_t used = 0;
        bool solved = false;
        double hh = h;
        const int max_attempts = 4; // modest widening only; a starved side is an error
        for (int attempt = 0; attempt < max_attempts && !solved; ++attempt) {
            used = 0;
            if (d == 2) {
                double s0 = 0, s1 = 0, s2 = 0;
                const double psit = std::atan2(target[1], target[0]);
                std::vector<std::pair<std::size_t, double>> win;
                for (std::size_t i = 0; i < n; ++i) {
                    double psi = std::atan2(s_points[i][1], s_points[i][0]);
                    double dpsi = psi - psit;
                    while (dpsi > kPi) dpsi -= 2.0 * kPi;
                    while (dpsi < -kPi) dpsi += 2.0 * kPi;
                    if (std::abs(dpsi) > hh) continue;
                    const double u = dpsi / hh;
                    const double w = 1.0 - u * u;
                    if (w <= 0.0) continue;
                    ++used;
                    win.emplace_back(i, dpsi);
                    s0 += w;
                    s1 += w * dpsi;
                    s2 += w * dpsi * dpsi;
                }
                const double det = s0 * s2 - s1 * s1;
                if (used >= config.min_points && det > 1e-250) {
                    for (const auto& [i, dpsi] : win) {
                        const double w = 1.0 - (dpsi / hh) * (dpsi / hh);
                        bw.nu[i] += w * (s2 - s1 * dpsi) / det;
                    }
                    solved = true;
                }
            } else {
                // local plane coordinates at the target: a = s_1 (inward
                // normal of the boundary), b = tangent along the equator
                const Vec3 tangent{0.0, -target[2], target[1]};
                double a00 = 0, a01 = 0, a02 = 0, a11 = 0, a12 = 0, a22 = 0;
                double cosh_ = std::cos(hh);
                std::vector<std::array<double, 3>> win; // index, a, b
                for (std::size_t i = 0; i < n; ++i) {
                    const Vec3 s{s_points[i][0], s_points[i][1], s_points[i][2]};
                    if (dot(s, target) < cosh_) continue;
                    const double a = s[0];
                    const double b = dot(s, tangent);
                    const double g2 =
                        (a * a + b * b) / (hh * hh); // small-angle geodesic
                    const double w = std::max(0.0, 1.0 - g2);
                    if (w <= 0.0) continue;
                    ++used;
                    win.push_back({static_cast<double>(i), a, b});
                    a00 += w;
                    a01 += w * a;
                    a02 += w * b;
                    a11 += w * a * a;
                    a12 += w * a * b;
                    a22 += w * b * b;
                }
                const double det = a00 * (a11 * a22 - a12 * a12) -
                                   a01 * (a01 * a22 - a12 * a02) +
                                   a02 * (a01 * a12 - a11 * a02);
                if (used >= config.min_points && std::abs(det) > 1e-250) {
                    // first row of the inverse normal matrix
                    const double i00 = (a11 * a22 - a12 * a12) / det;
                    const double i01 = -(a01 * a22 - a12 * a02) / det;
                    const double i02 = (a01 * a12 - a11 * a02) / det;
                    for (const auto& rec : win) {
                        const std::size_t i = static_cast<std::size_t>(rec[0]);
                        const double a = rec[1], b = rec[2];
                        const double w = std::max(0.0, 1.0 - (a * a + b * b) / (hh * hh));
                        bw.nu[i] += w * (i00 + i01 * a + i02 * b);
                    }
                    solved = true;
                }
            }
            if (!solved) hh *= 1.4;
        }
        if (!solved)
            throw data_error(std::string("mean_at_boundary: too few samples near the ") +
                             (side == 0 ? "positive" : "negative") + " boundary point");
        if (side == 0)
            bw.n_pos = used;
        else
            bw.n_neg = used;
    }
    return bw;
}

} // namespace

BoundaryMeanResult mean_at_boundary(const std::vector<double>& y, const std::vector<int>& r,
                                    const std::vector<std::vector<double>>& s_points,
                                    const Phi& phi, const Vec3& s_tilde,
                                    const BoundaryMeanConfig& config) {
    const std::size_t n = y.size();
    if (r.size() != n || s_points.size() != n)
        throw data_error("mean_at_boundary: size mismatch");

    // The two sides are disjoint windows, so a single weight vector per side
    // would do; computing both at once keeps the sweep reusable.
    BoundaryWeights bw = boundary_weights(s_points, s_tilde, config);

    // separate the two sides to report the one-sided limits
    BoundaryMeanResult res;
    res.n_pos = bw.n_pos;
    res.n_neg = bw.n_neg;
    double pos = 0.0, neg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (bw.nu[i] == 0.0) continue;
        const double resp = r[i] ? phi(y[i]) : 0.0;
        const double side = s_points[i][1] * s_tilde[1] +
                            (s_points[i].size() > 2 ? s_points[i][2] * s_tilde[2] : 0.0);
        if (side >= 0.0)
            pos += bw.nu[i] * resp;
        else
            neg += bw.nu[i] * resp;
    }
    res.limit_pos = pos;
    res.limit_neg = neg;
    res.estimate = pos + neg;
    return res;
}

SphericalFunction directional_density(const std::vector<std::vector<double>>& s_points,
                                      double bandwidth, const GridPtr& grid) {
    const std::size_t n = s_points.size();
    if (n == 0) throw data_error("directional_density: empty sample");
    const int d = grid->d;
    for (const auto& s : s_points) {
        double nrm2 = 0.0;
        for (double v : s) nrm2 += v * v;
        if (std::abs(nrm2 - 1.0) > 1e-8)
            throw data_error("directional_density: samples must be unit vectors");
    }
    double h = bandwidth;
    if (h <= 0.0)
        h = std::pow(static_cast<double>(n), d == 2 ? -0.2 : -1.0 / 6.0);
    const double kappa = 1.0 / (h * h);

    // canonical sample order so the estimate is permutation invariant
    std::vector<Vec3> pts(n);
    for (std::size_t i = 0; i < n; ++i)
        pts[i] = Vec3{s_points[i][0], s_points[i][1],
                      s_points[i].size() > 2 ? s_points[i][2] : 0.0};
    std::sort(pts.begin(), pts.end(), [](const Vec3& a, const Vec3& b) {
        if (a[0] != b[0]) return a[0] < b[0];
        if (a[1] != b[1]) return a[1] < b[1];
        return a[2] < b[2];
    });

    // boundary handling: reflect each sample across the H+ boundary, so each
    // (kernel + reflected kernel) pair carries unit mass on H+ and the
    // estimate has vanishing normal derivative at the boundary
    SphericalFunction f;
    f.grid = grid;
    f.values.assign(grid->size(), 0.0);
    const std::size_t m = grid->size();
#pragma omp parallel for schedule(static)
    for (long long jj = 0; jj < static_cast<long long>(m); ++jj) {
        const std::size_t j = static_cast<std::size_t>(jj);
        if (grid->nodes[j][0] < -1e-12) continue; // outside the observed support
        const Vec3& node = grid->nodes[j];
        const Vec3 mirrored{-node[0], node[1], node[2]};
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += std::exp(kappa * (dot(node, pts[i]) - 1.0)) +
                   std::exp(kappa * (dot(mirrored, pts[i]) - 1.0));
        f.values[j] = acc;
    }
    const double total = f.integral();
    if (total <= 0.0) throw numeric_error("directional_density: zero total mass");
    for (double& v : f.values) v /= total;
    f.is_density = true;
    return f;
}

double eval_spherical(const SphericalFunction& f, const Vec3& point) {
    const SphericalGrid& grid = *f.grid;
    if (grid.d == 2) {
        // nodes are ordered by angle for both grid builders
        const double psi = std::atan2(point[1], point[0]);
        const std::size_t m = grid.size();
        // binary search on node angles
        std::size_t lo = 0, hi = m;
        auto angle = [&](std::size_t j) {
            return std::atan2(grid.nodes[j][1], grid.nodes[j][0]);
        };
        if (!grid.hemisphere) {
            // uniform midpoint grid over [0, 2pi)
            double a = psi < 0.0 ? psi + 2.0 * kPi : psi;
            const double h = 2.0 * kPi / static_cast<double>(m);
            double pos = a / h - 0.5;
            if (pos < 0.0) pos += static_cast<double>(m);
            const std::size_t j0 = static_cast<std::size_t>(pos) % m;
            const std::size_t j1 = (j0 + 1) % m;
            const double frac = pos - std::floor(pos);
            return f.values[j0] * (1.0 - frac) + f.values[j1] * frac;
        }
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (angle(mid) <= psi)
                lo = mid;
            else
                hi = mid;
        }
        if (hi >= m) return f.values[m - 1];
        if (psi <= angle(0)) return f.values[0];
        const double a0 = angle(lo), a1 = angle(hi);
        const double frac = a1 > a0 ? (psi - a0) / (a1 - a0) : 0.0;
        return f.values[lo] * (1.0 - frac) + f.values[hi] * frac;
    }
    // d = 3 product grid: bilinear in (t, azimuth)
    const auto& t = grid.polar_t;
    const std::size_t np = t.size();
    const std::size_t na = grid.n_azimuth;
    if (np == 0 || na == 0) throw data_error("eval_spherical: grid lacks product structure");
    const double tt = point[0];
    std::size_t i1 = static_cast<std::size_t>(
        std::upper_bound(t.begin(), t.end(), tt) - t.begin());
    double ft;
    std::size_t i0;
    if (i1 == 0) {
        i0 = i1 = 0;
        ft = 0.0;
    } else if (i1 >= np) {
        i0 = i1 = np - 1;
        ft = 0.0;
    } else {
        i0 = i1 - 1;
        ft = (tt - t[i0]) / (t[i1] - t[i0]);
    }
    double phi = std::atan2(point[2], point[1]);
    if (phi < 0.0) phi += 2.0 * kPi;
    const double ha = 2.0 * kPi / static_cast<double>(na);
    double pos = phi / ha - 0.5;
    if (pos < 0.0) pos += static_cast<double>(na);
    const std::size_t j0 = static_cast<std::size_t>(pos) % na;
    const std::size_t j1 = (j0 + 1) % na;
    const double fp = pos - std::floor(pos);
    auto val = [&](std::size_t i, std::size_t j) { return f.values[i * na + j]; };
    const double v0 = val(i0, j0) * (1.0 - fp) + val(i0, j1) * fp;
    const double v1 = val(i1, j0) * (1.0 - fp) + val(i1, j1) * fp;
    return v0 * (1.0 - ft) + v1 * ft;
}

SeriesEstimate series_coefficients(const std::vector<double>& y, const std::vector<int>& r,
                                   const std::vector<std::vector<double>>& s_points,
                                   const Phi& phi, const GridPtr& gamma_grid, int truncation,
                                   double mean_estimate, const SeriesConfig& config) {
    const std::size_t n = y.size();
    if (r.size() != n || s_points.size() != n || n == 0)
        throw data_error("series_coefficients: size mismatch");
    const int d = gamma_grid->d;
    const int T = truncation;
    if (T < 0) throw std::domain_error("series_coefficients: truncation must be >= 0");

    // canonical sample order
    std::vector<double> key1(n), key2(n), key3(n);
    for (std::size_t i = 0; i < n; ++i) {
        key1[i] = s_points[i].size() > 1 ? std::atan2(s_points[i][1], s_points[i][0]) : 0.0;
        key2[i] = s_points[i].size() > 2 ? s_points[i][2] : 0.0;
        key3[i] = y[i];
    }
    const auto order = sorted_order(key1, key2, key3);

    // f_S estimate and per-sample inverse weights
    GridPtr dgrid = config.density_grid;
    if (!dgrid) dgrid = build_grid(d, d == 2 ? 512 : 48);
    SphericalFunction fs = directional_density(s_points, config.density_bandwidth, dgrid);
    double fmax = 0.0;
    for (double v : fs.values) fmax = std::max(fmax, v);
    const double floor_val = config.density_floor_ratio * fmax;

    SeriesEstimate est;
    est.gamma_grid = gamma_grid;
    est.coefficients.assign(static_cast<std::size_t>(T) + 1,
                            std::vector<double>(gamma_grid->size(), 0.0));

    std::size_t kept = 0;
    std::vector<double> resp_over_f; // phi(y) r / f_S(s), canonical order
    std::vector<Vec3> pts;
    resp_over_f.reserve(n);
    pts.reserve(n);
    for (std::size_t idx = 0; idx < n; ++idx) {
        const std::size_t i = order[idx];
        const Vec3 s{s_points[i][0], s_points[i][1],
                     s_points[i].size() > 2 ? s_points[i][2] : 0.0};
        const double fhat = eval_spherical(fs, s);
        if (fhat < floor_val) {
            ++est.dropped;
            continue;
        }
        ++kept;
        pts.push_back(s);
        resp_over_f.push_back((r[i] ? phi(y[i]) : 0.0) / fhat);
    }
    est.drop_warning = est.dropped * 20 > n; // > 5%
    if (kept == 0) throw data_error("series_coefficients: all samples below density floor");

    const GridPtr hemi = build_hemisphere_grid(d, config.hemisphere_quadrature);
    const double inv_n = 1.0 / static_cast<double>(kept);

    if (d == 2) {
        // harmonic moments: q_{k,2}(cos u) = cos(k u) / pi
        std::vector<double> mc(static_cast<std::size_t>(T) + 1, 0.0);
        std::vector<double> ms(static_cast<std::size_t>(T) + 1, 0.0);
        for (std::size_t i = 0; i < kept; ++i) {
            const double psi = std::atan2(pts[i][1], pts[i][0]);
            for (int p = 0; p <= T; ++p) {
                const double k = 2.0 * p + 1.0;
                mc[static_cast<std::size_t>(p)] += resp_over_f[i] * std::cos(k * psi);
                ms[static_cast<std::size_t>(p)] += resp_over_f[i] * std::sin(k * psi);
            }
        }
        for (std::size_t g = 0; g < gamma_grid->size(); ++g) {
            const double alpha =
                std::atan2(gamma_grid->nodes[g][1], gamma_grid->nodes[g][0]);
            for (int p = 0; p <= T; ++p) {
                const double k = 2.0 * p + 1.0;
                const double moment =
                    (std::cos(k * alpha) * mc[static_cast<std::size_t>(p)] +
                     std::sin(k * alpha) * ms[static_cast<std::size_t>(p)]) /
                    kPi;
                const double hq =
                    hemisphere_q_integral(2, p, gamma_grid->nodes[g], *hemi);
                est.coefficients[static_cast<std::size_t>(p)][g] =
                    2.0 * inv_n * moment - mean_estimate * hq;
            }
        }
    } else {
        const int kmax = 2 * T + 1;
        GegenbauerBasis basis(3, kmax);
        for (std::size_t g = 0; g < gamma_grid->size(); ++g) {
            const Vec3& gamma = gamma_grid->nodes[g];
            std::vector<double> acc(static_cast<std::size_t>(T) + 1, 0.0);
            for (std::size_t i = 0; i < kept; ++i) {
                const auto c = basis.eval_all(dot(gamma, pts[i]));
                for (int p = 0; p <= T; ++p) {
                    const int k = 2 * p + 1;
                    acc[static_cast<std::size_t>(p)] +=
                        resp_over_f[i] * harmonic_dim(k, 3) *
                        c[static_cast<std::size_t>(k)] / (sphere_area(3) * 1.0);
                    // C_k^{1/2}(1) = 1 for Legendre
                }
            }
            for (int p = 0; p <= T; ++p) {
                const double hq = hemisphere_q_integral(3, p, gamma, *hemi);
                est.coefficients[static_cast<std::size_t>(p)][g] =
                    2.0 * inv_n * acc[static_cast<std::size_t>(p)] - mean_estimate * hq;
            }
        }
    }

    est.root_odd.grid = gamma_grid;
    est.root_odd.values.assign(gamma_grid->size(), 0.0);
    for (int p = 0; p <= T; ++p) {
        const double il = 1.0 / lambda_coeff(d, p);
        for (std::size_t g = 0; g < gamma_grid->size(); ++g)
            est.root_odd.values[g] += il * est.coefficients[static_cast<std::size_t>(p)][g];
    }
    est.root = reconstruct_from_odd(est.root_odd, 1e-6);
    return est;
}

CdfEstimate nonrespondent_cdf(const std::vector<double>& y, const std::vector<int>& r,
                              const std::vector<std::vector<double>>& z_or_s,
                              const std::vector<double>& t_grid, CdfMethod method,
                              const CdfConfig& config) {
    const std::size_t n = y.size();
    if (r.size() != n || z_or_s.size() != n || n == 0)
        throw data_error("nonrespondent_cdf: size mismatch");
    double p0 = 0.0;
    for (int ri : r) p0 += ri ? 0.0 : 1.0;
    p0 /= static_cast<double>(n);
    if (p0 < config.min_nonresponse)
        throw data_error("nonrespondent_cdf: no nonrespondents to impute");

    // Per-sample functional weights omega with E_hat[phi_t(Y)] =
    // sum_i omega_i phi_t(y_i) r_i; both routes are linear in the response,
    // so the whole t-grid is a single cumulative sweep over the respondents.
    std::vector<double> omega;
    if (method == CdfMethod::scalar_threshold) {
        const auto p_hat =
            estimate_propensity(r, z_or_s, z_or_s, config.mean.propensity_bandwidth);
        omega = mean_integral_weights(p_hat, config.mean);
    } else {
        omega = boundary_weights(z_or_s, config.s_tilde, config.boundary).nu;
    }

    // respondents sorted by outcome (canonical order)
    std::vector<std::size_t> resp_idx;
    for (std::size_t i = 0; i < n; ++i)
        if (r[i]) resp_idx.push_back(i);
    std::sort(resp_idx.begin(), resp_idx.end(), [&](std::size_t a, std::size_t b) {
        if (y[a] != y[b]) return y[a] < y[b];
        return omega[a] < omega[b];
    });

    CdfEstimate est;
    est.t_grid = t_grid;
    est.p_r0 = p0;
    est.values.assign(t_grid.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);
    double cum_omega = 0.0, cum_count = 0.0;
    std::size_t pos = 0;
    for (std::size_t g = 0; g < t_grid.size(); ++g) {
        const double t = t_grid[g];
        if (g > 0 && t < t_grid[g - 1])
            throw data_error("nonrespondent_cdf: t_grid must be nondecreasing");
        while (pos < resp_idx.size() && y[resp_idx[pos]] <= t) {
            cum_omega += omega[resp_idx[pos]];
            cum_count += inv_n;
            ++pos;
        }
        est.values[g] = (cum_omega - cum_count) / p0;
    }
    est.values = isotonic(est.values);
    for (double& v : est.values) v = std::clamp(v, 0.0, 1.0);
    return est;
}

std::vector<double> isotonic(const std::vector<double>& values) {
    // pool adjacent violators, uniform weights
    std::vector<double> level;
    std::vector<double> count;
    for (double v : values) {
        level.push_back(v);
        count.push_back(1.0);
        while (level.size() > 1 && level[level.size() - 2] > level.back()) {
            const double c = count.back() + count[count.size() - 2];
            const double merged =
                (level.back() * count.back() +
                 level[level.size() - 2] * count[count.size() - 2]) /
                c;
            level.pop_back();
            count.pop_back();
            level.back() = merged;
            count.back() = c;
        }
    }
    std::vector<double> out;
    out.reserve(values.size());
    for (std::size_t b = 0; b < level.size(); ++b)
        for (std::size_t k = 0; k < static_cast<std::size_t>(count[b]); ++k)
            out.push_back(level[b]);
    return out;
}

} // namespace hemisel
