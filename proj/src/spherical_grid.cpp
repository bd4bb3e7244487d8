#include "hemisel/spherical_grid.hpp"

#include "hemisel/errors.hpp"
#include "hemisel/gegenbauer.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

namespace hemisel {

namespace {
constexpr double kPi = std::numbers::pi;
}

void gauss_legendre(int n, double a, double b, std::vector<double>& x,
                    std::vector<double>& w) {
    x.assign(static_cast<std::size_t>(n), 0.0);
    w.assign(static_cast<std::size_t>(n), 0.0);
    // Newton iteration on P_n, nodes symmetric about the midpoint.
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            double z1 = z;
            z = z1 - p0 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        const double xm = 0.5 * (b + a), xl = 0.5 * (b - a);
        x[static_cast<std::size_t>(i)] = xm - xl * z;
        x[static_cast<std::size_t>(n - 1 - i)] = xm + xl * z;
        const double wi = 2.0 * xl / ((1.0 - z * z) * pp * pp);
        w[static_cast<std::size_t>(i)] = wi;
        w[static_cast<std::size_t>(n - 1 - i)] = wi;
    }
}

GridPtr build_grid(int d, int resolution) {
    if (d != 2 && d != 3) throw capability_error("build_grid: only d in {2,3} supported");
    if (resolution < 8) throw std::domain_error("build_grid: resolution must be >= 8");

    auto grid = std::make_shared<SphericalGrid>();
    grid->d = d;

    if (d == 2) {
        int n = resolution + (resolution % 2); // antipodal closure needs even n
        const double h = 2.0 * kPi / n;
        grid->nodes.reserve(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) {
            const double phi = h * (j + 0.5);
            grid->nodes.push_back({std::cos(phi), std::sin(phi), 0.0});
            grid->weights.push_back(h);
        }
        grid->antipode.resize(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j)
            grid->antipode[static_cast<std::size_t>(j)] =
                static_cast<std::size_t>((j + n / 2) % n);
        return grid;
    }

    // d = 3: Gauss-Legendre in t = s_1, uniform midpoint azimuth in the
    // (e2, e3)-plane. Even counts so the antipodal map is exact.
    int np = resolution + (resolution % 2);
    int na = 2 * np;
    std::vector<double> t, wt;
    gauss_legendre(np, -1.0, 1.0, t, wt);
    const double ha = 2.0 * kPi / na;
    grid->polar_t = t;
    grid->polar_w = wt;
    grid->n_azimuth = static_cast<std::size_t>(na);
    grid->nodes.reserve(static_cast<std::size_t>(np) * na);
    for (int i = 0; i < np; ++i) {
        const double ti = t[static_cast<std::size_t>(i)];
        const double r = std::sqrt(std::max(0.0, 1.0 - ti * ti));
        for (int j = 0; j < na; ++j) {
            const double phi = ha * (j + 0.5);
            grid->nodes.push_back({ti, r * std::cos(phi), r * std::sin(phi)});
            grid->weights.push_back(wt[static_cast<std::size_t>(i)] * ha);
        }
    }
    grid->antipode.resize(grid->nodes.size());
    for (int i = 0; i < np; ++i) {
        for (int j = 0; j < na; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * na + j;
            const std::size_t ai = static_cast<std::size_t>(np - 1 - i);
            const std::size_t aj = static_cast<std::size_t>((j + na / 2) % na);
            grid->antipode[idx] = ai * na + aj;
        }
    }
    return grid;
}

GridPtr build_hemisphere_grid(int d, int resolution) {
    if (d != 2 && d != 3)
        throw capability_error("build_hemisphere_grid: only d in {2,3} supported");
    if (resolution < 8)
        throw std::domain_error("build_hemisphere_grid: resolution must be >= 8");

    auto grid = std::make_shared<SphericalGrid>();
    grid->d = d;
    grid->hemisphere = true;

    if (d == 2) {
        std::vector<double> phi, w;
        gauss_legendre(resolution, -0.5 * kPi, 0.5 * kPi, phi, w);
        for (int j = 0; j < resolution; ++j) {
            grid->nodes.push_back(
                {std::cos(phi[static_cast<std::size_t>(j)]),
                 std::sin(phi[static_cast<std::size_t>(j)]), 0.0});
            grid->weights.push_back(w[static_cast<std::size_t>(j)]);
        }
        return grid;
    }

    int np = resolution;
    int na = 2 * resolution;
    std::vector<double> t, wt;
    gauss_legendre(np, 0.0, 1.0, t, wt);
    const double ha = 2.0 * kPi / na;
    grid->polar_t = t;
    grid->polar_w = wt;
    grid->n_azimuth = static_cast<std::size_t>(na);
    for (int i = 0; i < np; ++i) {
        const double ti = t[static_cast<std::size_t>(i)];
        const double r = std::sqrt(std::max(0.0, 1.0 - ti * ti));
        for (int j = 0; j < na; ++j) {
            const double phi = ha * (j + 0.5);
            grid->nodes.push_back({ti, r * std::cos(phi), r * std::sin(phi)});
            grid->weights.push_back(wt[static_cast<std::size_t>(i)] * ha);
        }
    }
    return grid;
}

double integrate(const SphericalGrid& grid, const std::vector<double>& values) {
    if (values.size() != grid.size())
        throw data_error("integrate: value count does not match grid");
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) acc += grid.weights[i] * values[i];
    return acc;
}

void validate_density(const SphericalFunction& f, double tol) {
    for (double v : f.values)
        if (!(v >= -tol)) throw data_error("density has negative values");
    const double mass = f.integral();
    if (std::abs(mass - 1.0) > tol) throw data_error("density does not integrate to 1");
}

void write_spherical_csv(std::ostream& os, const SphericalFunction& f) {
    const SphericalGrid& grid = *f.grid;
    os << (grid.d == 2 ? "s_1,s_2" : "s_1,s_2,s_3") << ",weight,value\n";
    std::ostringstream tmp;
    tmp << std::setprecision(17);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        tmp.str("");
        tmp << grid.nodes[i][0] << "," << grid.nodes[i][1];
        if (grid.d == 3) tmp << "," << grid.nodes[i][2];
        tmp << "," << grid.weights[i] << "," << f.values[i] << "\n";
        os << tmp.str();
    }
}

} // namespace hemisel
