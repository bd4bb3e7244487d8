#include "hemisel/local_poly.hpp"

#include "hemisel/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hemisel {

namespace {

struct SortedView {
    std::vector<double> x;
    std::vector<double> y;
};

SortedView sort_by_x(const std::vector<double>& xs, const std::vector<double>& ys) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (xs[a] != xs[b]) return xs[a] < xs[b];
        return ys[a] < ys[b];
    });
    SortedView v;
    v.x.reserve(xs.size());
    v.y.reserve(xs.size());
    for (std::size_t i : order) {
        v.x.push_back(xs[i]);
        v.y.push_back(ys[i]);
    }
    return v;
}

// Window [lo, hi) of samples with |x - x0| <= h in a sorted array.
void window_range(const std::vector<double>& xs, double x0, double h, std::size_t& lo,
                  std::size_t& hi) {
    lo = static_cast<std::size_t>(
        std::lower_bound(xs.begin(), xs.end(), x0 - h) - xs.begin());
    hi = static_cast<std::size_t>(
        std::upper_bound(xs.begin(), xs.end(), x0 + h) - xs.begin());
}

} // namespace

double silverman_bandwidth(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    if (n < 2) return 1.0;
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    double mean = 0.0;
    for (double v : sorted) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : sorted) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n - 1);
    const double iqr = sorted[static_cast<std::size_t>(0.75 * (n - 1))] -
                       sorted[static_cast<std::size_t>(0.25 * (n - 1))];
    double scale = std::sqrt(var);
    if (iqr > 0.0) scale = std::min(scale, iqr / 1.349);
    if (scale <= 0.0) scale = std::max(std::abs(mean), 1.0);
    return 1.06 * scale * std::pow(static_cast<double>(n), -0.2);
}

LocalPolyResult local_poly(const std::vector<double>& xs, const std::vector<double>& ys,
                           const std::vector<double>& eval_points,
                           const LocalPolyConfig& config) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw data_error("local_poly: need len(xs) == len(ys) >= 2");
    if (config.degree != 0 && config.degree != 1)
        throw std::domain_error("local_poly: degree must be 0 or 1");

    const SortedView v = sort_by_x(xs, ys);
    const double h0 = config.bandwidth > 0.0 ? config.bandwidth : silverman_bandwidth(v.x);

    LocalPolyResult res;
    res.bandwidth_used = h0;
    res.values.assign(eval_points.size(), 0.0);
    res.derivatives.assign(eval_points.size(), 0.0);
    res.widened.assign(eval_points.size(), 0);

    for (std::size_t g = 0; g < eval_points.size(); ++g) {
        const double x0 = eval_points[g];
        double h = h0;
        std::size_t lo = 0, hi = 0;
        window_range(v.x, x0, h, lo, hi);
        while (hi - lo < config.min_points && h < 1e12) {
            h *= 2.0;
            res.widened[g] = 1;
            window_range(v.x, x0, h, lo, hi);
        }
        double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double u = (v.x[i] - x0) / h;
            const double w = 1.0 - u * u;
            if (w <= 0.0) continue;
            const double dxi = v.x[i] - x0;
            s0 += w;
            s1 += w * dxi;
            s2 += w * dxi * dxi;
            t0 += w * v.y[i];
            t1 += w * dxi * v.y[i];
        }
        if (config.degree == 0 || s2 * s0 - s1 * s1 <= 1e-300 * s0 * s0) {
            res.values[g] = s0 > 0.0 ? t0 / s0 : 0.0;
            res.derivatives[g] = 0.0;
        } else {
            const double det = s0 * s2 - s1 * s1;
            res.values[g] = (s2 * t0 - s1 * t1) / det;
            res.derivatives[g] = (s0 * t1 - s1 * t0) / det;
        }
    }
    return res;
}

std::vector<double> local_linear_functional_weights(
    const std::vector<double>& xs, const std::vector<double>& eval_points,
    const std::vector<double>& value_coef, const std::vector<double>& deriv_coef,
    const LocalPolyConfig& config) {
    if (value_coef.size() != eval_points.size() || deriv_coef.size() != eval_points.size())
        throw data_error("functional_weights: coefficient size mismatch");
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> xsort(n);
    for (std::size_t i = 0; i < n; ++i) xsort[i] = xs[order[i]];
    const double h0 = config.bandwidth > 0.0 ? config.bandwidth : silverman_bandwidth(xsort);

    std::vector<double> omega(n, 0.0);
    for (std::size_t g = 0; g < eval_points.size(); ++g) {
        if (value_coef[g] == 0.0 && deriv_coef[g] == 0.0) continue;
        const double x0 = eval_points[g];
        double h = h0;
        std::size_t lo = 0, hi = 0;
        window_range(xsort, x0, h, lo, hi);
        while (hi - lo < config.min_points && h < 1e12) {
            h *= 2.0;
            window_range(xsort, x0, h, lo, hi);
        }
        double s0 = 0, s1 = 0, s2 = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double u = (xsort[i] - x0) / h;
            const double w = 1.0 - u * u;
            if (w <= 0.0) continue;
            const double dxi = xsort[i] - x0;
            s0 += w;
            s1 += w * dxi;
            s2 += w * dxi * dxi;
        }
        const double det = s0 * s2 - s1 * s1;
        if (det <= 1e-300 * s0 * s0) {
            // degenerate design: fall back to the window mean for the value part
            if (s0 > 0.0) {
                for (std::size_t i = lo; i < hi; ++i) {
                    const double u = (xsort[i] - x0) / h;
                    const double w = 1.0 - u * u;
                    if (w <= 0.0) continue;
                    omega[order[i]] += value_coef[g] * w / s0;
                }
            }
            continue;
        }
        for (std::size_t i = lo; i < hi; ++i) {
            const double u = (xsort[i] - x0) / h;
            const double w = 1.0 - u * u;
            if (w <= 0.0) continue;
            const double dxi = xsort[i] - x0;
            const double wv = w * (s2 - s1 * dxi) / det;      // weight in m_hat(x0)
            const double wd = w * (s0 * dxi - s1) / det;      // weight in m_hat'(x0)
            omega[order[i]] += value_coef[g] * wv + deriv_coef[g] * wd;
        }
    }
    return omega;
}

std::vector<double> nw_regression_sorted(const std::vector<double>& xs,
                                         const std::vector<double>& ys,
                                         const std::vector<double>& eval_points,
                                         double bandwidth) {
    const std::size_t n = xs.size();
    if (n == 0) throw data_error("nw_regression: empty sample");
    // prefix sums of 1, x, x^2 and y, yx, yx^2
    std::vector<double> c1(n + 1, 0), cx(n + 1, 0), cx2(n + 1, 0);
    std::vector<double> cy(n + 1, 0), cyx(n + 1, 0), cyx2(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        c1[i + 1] = c1[i] + 1.0;
        cx[i + 1] = cx[i] + xs[i];
        cx2[i + 1] = cx2[i] + xs[i] * xs[i];
        cy[i + 1] = cy[i] + ys[i];
        cyx[i + 1] = cyx[i] + ys[i] * xs[i];
        cyx2[i + 1] = cyx2[i] + ys[i] * xs[i] * xs[i];
    }
    std::vector<double> out(eval_points.size(), 0.0);
    for (std::size_t g = 0; g < eval_points.size(); ++g) {
        const double x0 = eval_points[g];
        double h = bandwidth;
        double num = 0.0, den = 0.0;
        for (int attempt = 0; attempt < 48; ++attempt) {
            std::size_t lo = 0, hi = 0;
            window_range(xs, x0, h, lo, hi);
            if (hi > lo) {
                const double n0 = c1[hi] - c1[lo];
                const double n1 = cx[hi] - cx[lo];
                const double n2 = cx2[hi] - cx2[lo];
                const double m0 = cy[hi] - cy[lo];
                const double m1 = cyx[hi] - cyx[lo];
                const double m2 = cyx2[hi] - cyx2[lo];
                // sum of (1 - (x - x0)^2/h^2) resp over the window
                den = n0 - (n2 - 2.0 * x0 * n1 + x0 * x0 * n0) / (h * h);
                num = m0 - (m2 - 2.0 * x0 * m1 + x0 * x0 * m0) / (h * h);
                if (den > 1e-12) break;
            }
            h *= 2.0;
        }
        out[g] = den > 0.0 ? num / den : 0.0;
    }
    return out;
}

void local_linear_2d(const std::vector<double>& x, const std::vector<double>& z,
                     const std::vector<double>& resp,
                     const std::vector<double>& eval_x, const std::vector<double>& eval_z,
                     const LocalPoly2dConfig& config, std::vector<double>& values,
                     std::vector<double>& dx) {
    const std::size_t n = x.size();
    if (z.size() != n || resp.size() != n) throw data_error("local_linear_2d: size mismatch");
    // canonical order: (z, x, resp)
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (z[a] != z[b]) return z[a] < z[b];
        if (x[a] != x[b]) return x[a] < x[b];
        return resp[a] < resp[b];
    });
    std::vector<double> zs(n), xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        zs[i] = z[order[i]];
        xs[i] = x[order[i]];
        ys[i] = resp[order[i]];
    }
    const std::size_t m = eval_x.size();
    values.assign(m, 0.0);
    dx.assign(m, 0.0);

    for (std::size_t g = 0; g < m; ++g) {
        const double x0 = eval_x[g], z0 = eval_z[g];
        double hx = config.bandwidth_x, hz = config.bandwidth_z;
        for (int attempt = 0; attempt < 48; ++attempt) {
            std::size_t lo = static_cast<std::size_t>(
                std::lower_bound(zs.begin(), zs.end(), z0 - hz) - zs.begin());
            std::size_t hi = static_cast<std::size_t>(
                std::upper_bound(zs.begin(), zs.end(), z0 + hz) - zs.begin());
            // normal equations for resp ~ 1 + (x-x0) + (z-z0)
            double a00 = 0, a01 = 0, a02 = 0, a11 = 0, a12 = 0, a22 = 0;
            double b0 = 0, b1 = 0, b2 = 0;
            std::size_t used = 0;
            for (std::size_t i = lo; i < hi; ++i) {
                const double ux = (xs[i] - x0) / hx;
                if (ux < -1.0 || ux > 1.0) continue;
                const double uz = (zs[i] - z0) / hz;
                const double w = (1.0 - ux * ux) * (1.0 - uz * uz);
                if (w <= 0.0) continue;
                ++used;
                const double dxi = xs[i] - x0, dzi = zs[i] - z0;
                a00 += w;
                a01 += w * dxi;
                a02 += w * dzi;
                a11 += w * dxi * dxi;
                a12 += w * dxi * dzi;
                a22 += w * dzi * dzi;
                b0 += w * ys[i];
                b1 += w * dxi * ys[i];
                b2 += w * dzi * ys[i];
            }
            if (used >= config.min_points) {
                // solve the 3x3 system by Cramer's rule
                const double det = a00 * (a11 * a22 - a12 * a12) - a01 * (a01 * a22 - a12 * a02) +
                                   a02 * (a01 * a12 - a11 * a02);
                if (std::abs(det) > 1e-250) {
                    const double c0 = b0 * (a11 * a22 - a12 * a12) - a01 * (b1 * a22 - a12 * b2) +
                                      a02 * (b1 * a12 - a11 * b2);
                    const double c1 = a00 * (b1 * a22 - b2 * a12) - b0 * (a01 * a22 - a12 * a02) +
                                      a02 * (a01 * b2 - b1 * a02);
                    values[g] = c0 / det;
                    dx[g] = c1 / det;
                    break;
                }
            }
            hx *= 1.5;
            hz *= 1.5;
        }
    }
}

} // namespace hemisel
