#include "hemisel/hemispherical.hpp"

#include "hemisel/errors.hpp"
#include "hemisel/gegenbauer.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace hemisel {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kBoundaryTol = 1e-12;

double mask_weight(double s) {
    if (s > kBoundaryTol) return 1.0;
    if (s < -kBoundaryTol) return 0.0;
    return 0.5;
}

// Normalized associated Legendre functions Pbar_{k,m}(t) for all k <= kmax,
// 0 <= m <= k, such that the real spherical harmonics are
//   Y_{k,0}  = Pbar_{k,0},
//   Y_{k,m}  = sqrt(2) Pbar_{k,m} cos(m phi),   m > 0,
//   Y_{k,-m} = sqrt(2) Pbar_{k,m} sin(m phi),
// and sum_m Y_{k,m}(a) Y_{k,m}(b) = q_{k,3}(a.b). Row-major (k, m) with
// index k*(k+1)/2 + m.
void normalized_alp(int kmax, double t, std::vector<double>& out) {
    const std::size_t count = static_cast<std::size_t>(kmax + 1) * (kmax + 2) / 2;
    out.assign(count, 0.0);
    const double r = std::sqrt(std::max(0.0, 1.0 - t * t));
    auto at = [kmax, &out](int k, int m) -> double& {
        (void)kmax;
        return out[static_cast<std::size_t>(k) * (k + 1) / 2 + m];
    };
    at(0, 0) = std::sqrt(1.0 / (4.0 * kPi));
    for (int m = 1; m <= kmax; ++m)
        at(m, m) = -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * r * at(m - 1, m - 1);
    for (int m = 0; m < kmax; ++m)
        at(m + 1, m) = std::sqrt(2.0 * m + 3.0) * t * at(m, m);
    for (int m = 0; m <= kmax; ++m) {
        for (int k = m + 2; k <= kmax; ++k) {
            const double a =
                std::sqrt((4.0 * k * k - 1.0) / (static_cast<double>(k) * k - m * m));
            const double b = std::sqrt(
                (static_cast<double>(k - 1) * (k - 1) - m * m) / (4.0 * (k - 1.0) * (k - 1) - 1.0));
            at(k, m) = a * (t * at(k - 1, m) - b * at(k - 2, m));
        }
    }
}

// cos(m phi), sin(m phi) for m = 0..kmax by angle recursion.
void azimuth_table(int kmax, double c, double s, std::vector<double>& cm,
                   std::vector<double>& sm) {
    cm.assign(static_cast<std::size_t>(kmax) + 1, 1.0);
    sm.assign(static_cast<std::size_t>(kmax) + 1, 0.0);
    for (int m = 1; m <= kmax; ++m) {
        cm[static_cast<std::size_t>(m)] =
            cm[static_cast<std::size_t>(m - 1)] * c - sm[static_cast<std::size_t>(m - 1)] * s;
        sm[static_cast<std::size_t>(m)] =
            sm[static_cast<std::size_t>(m - 1)] * c + cm[static_cast<std::size_t>(m - 1)] * s;
    }
}

} // namespace

namespace {

SphericalFunction forward_masked(const SphericalFunction& f) {
    const SphericalGrid& grid = *f.grid;
    SphericalFunction g;
    g.grid = f.grid;
    g.values.assign(grid.size(), 0.0);
    const std::size_t n = grid.size();
#pragma omp parallel for schedule(static)
    for (long long ii = 0; ii < static_cast<long long>(n); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const Vec3& s = grid.nodes[i];
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += grid.weights[j] * f.values[j] * mask_weight(dot(s, grid.nodes[j]));
        }
        g.values[i] = acc;
    }
    return g;
}

SphericalFunction forward_multiplier(const SphericalFunction& f, int band) {
    const SphericalGrid& grid = *f.grid;
    SphericalFunction g;
    g.grid = f.grid;
    g.values.assign(grid.size(), 0.0);
    const std::size_t n = grid.size();

    // constant part: lambda_0 = |S^{d-1}| / 2 acting on the mean
    double mass = 0.0;
    for (std::size_t j = 0; j < n; ++j) mass += grid.weights[j] * f.values[j];
    for (double& v : g.values) v = 0.5 * mass;

    if (grid.d == 2) {
        const int kmax =
            band > 0 ? band : std::min<int>(128, static_cast<int>(n) / 2 - 1);
        std::vector<double> mc, ms, psi(n);
        for (std::size_t j = 0; j < n; ++j)
            psi[j] = std::atan2(grid.nodes[j][1], grid.nodes[j][0]);
        for (int k = 1; k <= kmax; k += 2) {
            double ac = 0.0, as = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double w = grid.weights[j] * f.values[j];
                ac += w * std::cos(k * psi[j]);
                as += w * std::sin(k * psi[j]);
            }
            const double lam = lambda_coeff(2, (k - 1) / 2);
            for (std::size_t i = 0; i < n; ++i)
                g.values[i] +=
                    lam / kPi * (std::cos(k * psi[i]) * ac + std::sin(k * psi[i]) * as);
        }
        return g;
    }

    const int np = static_cast<int>(grid.polar_t.size());
    const int kmax = band > 0 ? band : std::min(64, np > 1 ? np - 1 : 64);
    const std::size_t ncoef = static_cast<std::size_t>(kmax + 1) * (kmax + 2) / 2;
    std::vector<double> coef_c(ncoef, 0.0), coef_s(ncoef, 0.0);
    auto idx = [](int k, int m) { return static_cast<std::size_t>(k) * (k + 1) / 2 + m; };
    std::vector<double> pbar, cm, sm;
    for (std::size_t j = 0; j < n; ++j) {
        const Vec3& s = grid.nodes[j];
        const double r = std::hypot(s[1], s[2]);
        normalized_alp(kmax, s[0], pbar);
        azimuth_table(kmax, r > 0.0 ? s[1] / r : 1.0, r > 0.0 ? s[2] / r : 0.0, cm, sm);
        const double wf = grid.weights[j] * f.values[j];
        for (int k = 1; k <= kmax; k += 2) {
            coef_c[idx(k, 0)] += wf * pbar[idx(k, 0)];
            for (int m = 1; m <= k; ++m) {
                const double base = std::numbers::sqrt2 * pbar[idx(k, m)] * wf;
                coef_c[idx(k, m)] += base * cm[static_cast<std::size_t>(m)];
                coef_s[idx(k, m)] += base * sm[static_cast<std::size_t>(m)];
            }
        }
    }
    std::vector<double> lam(static_cast<std::size_t>(kmax) + 1, 0.0);
    for (int k = 1; k <= kmax; k += 2)
        lam[static_cast<std::size_t>(k)] = lambda_coeff(3, (k - 1) / 2);
#pragma omp parallel for schedule(static) private(pbar, cm, sm)
    for (long long ii = 0; ii < static_cast<long long>(n); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const Vec3& s = grid.nodes[i];
        const double r = std::hypot(s[1], s[2]);
        normalized_alp(kmax, s[0], pbar);
        azimuth_table(kmax, r > 0.0 ? s[1] / r : 1.0, r > 0.0 ? s[2] / r : 0.0, cm, sm);
        double acc = 0.0;
        for (int k = 1; k <= kmax; k += 2) {
            double proj = coef_c[idx(k, 0)] * pbar[idx(k, 0)];
            for (int m = 1; m <= k; ++m) {
                const double base = std::numbers::sqrt2 * pbar[idx(k, m)];
                proj += base * (coef_c[idx(k, m)] * cm[static_cast<std::size_t>(m)] +
                                coef_s[idx(k, m)] * sm[static_cast<std::size_t>(m)]);
            }
            acc += lam[static_cast<std::size_t>(k)] * proj;
        }
        g.values[i] += acc;
    }
    return g;
}

} // namespace

SphericalFunction forward(const SphericalFunction& f, const ForwardOptions& options) {
    if (options.masked) return forward_masked(f);
    return forward_multiplier(f, options.band);
}

SphericalFunction odd_part(const SphericalFunction& f) {
    const SphericalGrid& grid = *f.grid;
    SphericalFunction out;
    out.grid = f.grid;
    out.values.assign(grid.size(), 0.0);
    if (!grid.antipode.empty()) {
        for (std::size_t i = 0; i < grid.size(); ++i)
            out.values[i] = 0.5 * (f.values[i] - f.values[grid.antipode[i]]);
        return out;
    }
    // No precomputed closure: pair with the nearest node to -theta.
    out.antipodal_fallback = true;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vec3 anti{-grid.nodes[i][0], -grid.nodes[i][1], -grid.nodes[i][2]};
        std::size_t best = 0;
        double best_dot = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double dj = dot(anti, grid.nodes[j]);
            if (dj > best_dot) {
                best_dot = dj;
                best = j;
            }
        }
        out.values[i] = 0.5 * (f.values[i] - f.values[best]);
    }
    return out;
}

SphericalFunction reconstruct_from_odd(const SphericalFunction& fm, double tol) {
    const SphericalGrid& grid = *fm.grid;
    if (!grid.antipode.empty()) {
        double sup = 0.0, worst = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            sup = std::max(sup, std::abs(fm.values[i]));
            worst = std::max(worst,
                             std::abs(fm.values[i] + fm.values[grid.antipode[i]]));
        }
        if (worst > tol * std::max(1.0, sup))
            throw data_error("reconstruct_from_odd: input is not odd");
    }
    SphericalFunction out;
    out.grid = fm.grid;
    out.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        out.values[i] = fm.values[i] > 0.0 ? 2.0 * fm.values[i] : 0.0;
    return out;
}

SphericalFunction inverse_series(const SphericalFunction& g, int truncation,
                                 const GridPtr& gamma_grid, const InverseOptions& options) {
    if (truncation < 0) throw std::domain_error("inverse_series: truncation must be >= 0");
    const SphericalGrid& sgrid = *g.grid;
    const SphericalGrid& ggrid = *gamma_grid;
    if (sgrid.d != ggrid.d) throw data_error("inverse_series: grid dimensions differ");
    const int d = sgrid.d;
    const int T = truncation;
    const int kmax = 2 * T + 1;

    std::vector<double> inv_lambda(static_cast<std::size_t>(T) + 1);
    for (int p = 0; p <= T; ++p) {
        double w = 1.0;
        if (options.damping) w = 0.5 * (1.0 + std::cos(kPi * p / (T + 1.0)));
        inv_lambda[static_cast<std::size_t>(p)] = w / lambda_coeff(d, p);
    }

    SphericalFunction out;
    out.grid = gamma_grid;
    out.values.assign(ggrid.size(), 0.0);

    if (d == 2) {
        // Fourier moments of g at the odd frequencies.
        std::vector<double> mc(static_cast<std::size_t>(T) + 1, 0.0);
        std::vector<double> ms(static_cast<std::size_t>(T) + 1, 0.0);
        for (std::size_t j = 0; j < sgrid.size(); ++j) {
            const double w = sgrid.weights[j] * g.values[j];
            const double psi = std::atan2(sgrid.nodes[j][1], sgrid.nodes[j][0]);
            for (int p = 0; p <= T; ++p) {
                const double k = 2.0 * p + 1.0;
                mc[static_cast<std::size_t>(p)] += w * std::cos(k * psi);
                ms[static_cast<std::size_t>(p)] += w * std::sin(k * psi);
            }
        }
        for (std::size_t i = 0; i < ggrid.size(); ++i) {
            const double alpha = std::atan2(ggrid.nodes[i][1], ggrid.nodes[i][0]);
            double acc = 0.0;
            for (int p = 0; p <= T; ++p) {
                const double k = 2.0 * p + 1.0;
                const double proj = (std::cos(k * alpha) * mc[static_cast<std::size_t>(p)] +
                                     std::sin(k * alpha) * ms[static_cast<std::size_t>(p)]) /
                                    kPi;
                acc += inv_lambda[static_cast<std::size_t>(p)] * proj;
            }
            out.values[i] = acc;
        }
        return out;
    }

    // d = 3: project g on real spherical harmonics of odd degree <= kmax.
    const std::size_t ncoef = static_cast<std::size_t>(kmax + 1) * (kmax + 2) / 2;
    std::vector<double> coef_c(ncoef, 0.0), coef_s(ncoef, 0.0);
    auto idx = [](int k, int m) { return static_cast<std::size_t>(k) * (k + 1) / 2 + m; };

    std::vector<double> pbar, cm, sm;
    for (std::size_t j = 0; j < sgrid.size(); ++j) {
        const Vec3& s = sgrid.nodes[j];
        const double t = s[0];
        const double r = std::hypot(s[1], s[2]);
        const double cphi = r > 0.0 ? s[1] / r : 1.0;
        const double sphi = r > 0.0 ? s[2] / r : 0.0;
        normalized_alp(kmax, t, pbar);
        azimuth_table(kmax, cphi, sphi, cm, sm);
        const double wg = sgrid.weights[j] * g.values[j];
        for (int k = 1; k <= kmax; k += 2) {
            coef_c[idx(k, 0)] += wg * pbar[idx(k, 0)];
            for (int m = 1; m <= k; ++m) {
                const double base = std::numbers::sqrt2 * pbar[idx(k, m)] * wg;
                coef_c[idx(k, m)] += base * cm[static_cast<std::size_t>(m)];
                coef_s[idx(k, m)] += base * sm[static_cast<std::size_t>(m)];
            }
        }
    }

    for (std::size_t i = 0; i < ggrid.size(); ++i) {
        const Vec3& gamma = ggrid.nodes[i];
        const double t = gamma[0];
        const double r = std::hypot(gamma[1], gamma[2]);
        const double cphi = r > 0.0 ? gamma[1] / r : 1.0;
        const double sphi = r > 0.0 ? gamma[2] / r : 0.0;
        normalized_alp(kmax, t, pbar);
        azimuth_table(kmax, cphi, sphi, cm, sm);
        double acc = 0.0;
        for (int p = 0; p <= T; ++p) {
            const int k = 2 * p + 1;
            double proj = coef_c[idx(k, 0)] * pbar[idx(k, 0)];
            for (int m = 1; m <= k; ++m) {
                const double base = std::numbers::sqrt2 * pbar[idx(k, m)];
                proj += base * (coef_c[idx(k, m)] * cm[static_cast<std::size_t>(m)] +
                                coef_s[idx(k, m)] * sm[static_cast<std::size_t>(m)]);
            }
            acc += inv_lambda[static_cast<std::size_t>(p)] * proj;
        }
        out.values[i] = acc;
    }
    return out;
}

double hemisphere_q_integral(int d, int p, const Vec3& gamma, const SphericalGrid& grid) {
    if (grid.d != d) throw data_error("hemisphere_q_integral: grid dimension mismatch");
    const double norm = std::sqrt(dot(gamma, gamma));
    if (std::abs(norm - 1.0) > 1e-8)
        throw std::domain_error("hemisphere_q_integral: gamma must be a unit vector");
    const int k = 2 * p + 1;
    GegenbauerBasis basis(d, k);
    double acc = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double m = grid.hemisphere ? 1.0 : mask_weight(grid.nodes[j][0]);
        if (m == 0.0) continue;
        acc += m * grid.weights[j] * basis.q(k, dot(gamma, grid.nodes[j]));
    }
    return acc;
}

} // namespace hemisel
