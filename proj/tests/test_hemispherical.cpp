#include "hemisel/errors.hpp"
#include "hemisel/gegenbauer.hpp"
#include "hemisel/hemispherical.hpp"
#include "hemisel/spherical_grid.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace hemisel;

namespace {

constexpr double kPi = std::numbers::pi;

double node_angle(const Vec3& s) { return std::atan2(s[1], s[0]); }

// f(theta) = (cos theta / 2) 1{|theta| <= pi/2}; H[f](phi) = (1 + cos phi)/2,
// f^-(theta) = cos(theta)/4.
SphericalFunction halfcircle_density(const GridPtr& grid) {
    SphericalFunction f;
    f.grid = grid;
    f.values.resize(grid->size());
    for (std::size_t i = 0; i < grid->size(); ++i) {
        const double c = grid->nodes[i][0]; // cos(theta)
        f.values[i] = c > 0.0 ? 0.5 * c : 0.0;
    }
    return f;
}

double rel_l2_error(const SphericalFunction& est, const std::vector<double>& truth) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < est.values.size(); ++i) {
        const double w = est.grid->weights[i];
        num += w * (est.values[i] - truth[i]) * (est.values[i] - truth[i]);
        den += w * truth[i] * truth[i];
    }
    return std::sqrt(num / den);
}

} // namespace

TEST_CASE("forward: uniform density maps to 1/2 everywhere") {
    for (int d : {2, 3}) {
        const auto grid = build_grid(d, d == 2 ? 256 : 24);
        SphericalFunction f;
        f.grid = grid;
        f.values.assign(grid->size(), 1.0 / sphere_area(d));
        const auto g = forward(f);
        for (double v : g.values) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("forward: even mean-zero functions are in the null space") {
    const auto grid = build_grid(3, 24);
    SphericalFunction f;
    f.grid = grid;
    f.values.resize(grid->size());
    for (std::size_t i = 0; i < grid->size(); ++i) {
        const auto& s = grid->nodes[i];
        // even, integrates to 0: s_1^2 - 1/3
        f.values[i] = s[0] * s[0] - 1.0 / 3.0;
    }
    const auto g = forward(f);
    for (double v : g.values) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("forward: closed-form pair in d=2") {
    const auto grid = build_grid(2, 1024);
    const auto f = halfcircle_density(grid);
    const auto g = forward(f);
    for (std::size_t i = 0; i < grid->size(); ++i) {
        const double phi = node_angle(grid->nodes[i]);
        CHECK(g.values[i] == doctest::Approx(0.5 * (1.0 + std::cos(phi))).epsilon(5e-5));
    }
}

TEST_CASE("forward is linear") {
    const auto grid = build_grid(2, 64);
    SphericalFunction f1, f2;
    f1.grid = f2.grid = grid;
    for (std::size_t i = 0; i < grid->size(); ++i) {
        const double a = node_angle(grid->nodes[i]);
        f1.values.push_back(std::exp(std::sin(a)));
        f2.values.push_back(std::cos(2.0 * a) + 0.3);
    }
    const auto g1 = forward(f1), g2 = forward(f2);
    SphericalFunction mix;
    mix.grid = grid;
    for (std::size_t i = 0; i < grid->size(); ++i)
        mix.values.push_back(2.5 * f1.values[i] - 0.7 * f2.values[i]);
    const auto gm = forward(mix);
    for (std::size_t i = 0; i < grid->size(); ++i)
        CHECK(gm.values[i] ==
              doctest::Approx(2.5 * g1.values[i] - 0.7 * g2.values[i]).epsilon(1e-10));
}

TEST_CASE("odd_part: closed forms and fixed points") {
    const auto grid = build_grid(2, 512);
    const auto f = halfcircle_density(grid);
    const auto fm = odd_part(f);
    for (std::size_t i = 0; i < grid->size(); ++i) {
        const double theta = node_angle(grid->nodes[i]);
        CHECK(fm.values[i] == doctest::Approx(std::cos(theta) / 4.0).epsilon(1e-12));
    }
    // uniform -> zero
    SphericalFunction u;
    u.grid = grid;
    u.values.assign(grid->size(), 1.0 / (2.0 * kPi));
    const auto um = odd_part(u);
    for (double v : um.values) CHECK(v == doctest::Approx(0.0));
    // any odd function is a fixed point
    SphericalFunction odd;
    odd.grid = grid;
    for (std::size_t i = 0; i < grid->size(); ++i) {
        const double a = node_angle(grid->nodes[i]);
        odd.values.push_back(std::sin(a) + 0.2 * std::sin(3.0 * a));
    }
    const auto om = odd_part(odd);
    for (std::size_t i = 0; i < grid->size(); ++i)
        CHECK(om.values[i] == doctest::Approx(odd.values[i]).epsilon(1e-12));
}

TEST_CASE("decomposition identity: H[f] - H[f^-] is constant (integral f)/2") {
    const auto grid = build_grid(3, 16);
    SphericalFunction f;
    f.grid = grid;
    for (std::size_t i = 0; i < grid->size(); ++i) {
        const auto& s = grid->nodes[i];
        f.values.push_back(std::exp(0.8 * s[0] + 0.3 * s[1] - 0.1 * s[2]));
    }
    const double mass = f.integral();
    const auto g = forward(f);
    const auto gm = forward(odd_part(f));
    for (std::size_t i = 0; i < grid->size(); ++i)
        CHECK(g.values[i] - gm.values[i] == doctest::Approx(0.5 * mass).epsilon(1e-10));
}

TEST_CASE("reconstruct_from_odd: closed form and error path") {
    const auto grid = build_grid(2, 512);
    SphericalFunction fm;
    fm.grid = grid;
    for (std::size_t i = 0; i < grid->size(); ++i)
        fm.values.push_back(std::cos(node_angle(grid->nodes[i])) / 4.0);
    const auto f = reconstruct_from_odd(fm);
    for (std::size_t i = 0; i < grid->size(); ++i) {
        const double c = std::cos(node_angle(grid->nodes[i]));
        CHECK(f.values[i] == doctest::Approx(c > 0.0 ? 0.5 * c : 0.0).epsilon(1e-12));
    }
    // zero stays zero
    SphericalFunction z;
    z.grid = grid;
    z.values.assign(grid->size(), 0.0);
    const auto rz = reconstruct_from_odd(z);
    for (double v : rz.values) CHECK(v == 0.0);
    // non-odd input rejected
    SphericalFunction bad;
    bad.grid = grid;
    bad.values.assign(grid->size(), 1.0);
    CHECK_THROWS_AS((void)reconstruct_from_odd(bad), data_error);
}

TEST_CASE("round trip odd_part -> reconstruct recovers hemisphere-supported density") {
    const auto grid = build_grid(2, 512);
    SphericalFunction f;
    f.grid = grid;
    for (std::size_t i = 0; i < grid->size(); ++i) {
        const double c = grid->nodes[i][0];
        f.values.push_back(c > 0.0 ? c * c : 0.0); // supported on {cos > 0}
    }
    const auto back = reconstruct_from_odd(odd_part(f));
    for (std::size_t i = 0; i < grid->size(); ++i)
        CHECK(back.values[i] == doctest::Approx(f.values[i]).epsilon(1e-8));
}

TEST_CASE("inverse_series: constants give zero odd part") {
    const auto grid = build_grid(2, 128);
    SphericalFunction g;
    g.grid = grid;
    g.values.assign(grid->size(), 0.37);
    const auto fm = inverse_series(g, 5, grid);
    for (double v : fm.values) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("inverse_series: closed-form pair in d=2") {
    const auto grid = build_grid(2, 512);
    SphericalFunction g;
    g.grid = grid;
    for (std::size_t i = 0; i < grid->size(); ++i)
        g.values.push_back(0.5 * (1.0 + grid->nodes[i][0]));
    const auto fm = inverse_series(g, 15, grid);
    double sup = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i)
        sup = std::max(sup, std::abs(fm.values[i] - grid->nodes[i][0] / 4.0));
    CHECK(sup < 1e-3);
    // replacing g by its odd part changes nothing (within quadrature tolerance)
    const auto fm2 = inverse_series(odd_part(g), 15, grid);
    for (std::size_t i = 0; i < grid->size(); ++i)
        CHECK(fm.values[i] == doctest::Approx(fm2.values[i]).epsilon(1e-10));
    // output is odd across antipodal pairs
    for (std::size_t i = 0; i < grid->size(); ++i)
        CHECK(std::abs(fm.values[i] + fm.values[grid->antipode[i]]) < 1e-8);
}

TEST_CASE("inverse_series matches the direct zonal quadrature (oracle)") {
    // the harmonic-sum evaluation must agree with a literal sum over nodes of
    // q_{2p+1,d}(gamma.s) g(s) w(s) / lambda
    for (int d : {2, 3}) {
        const auto grid = build_grid(d, d == 2 ? 64 : 12);
        SphericalFunction g;
        g.grid = grid;
        for (std::size_t i = 0; i < grid->size(); ++i) {
            const auto& s = grid->nodes[i];
            g.values.push_back(0.4 + s[0] - 0.6 * s[1] * s[0] + 0.2 * s[2]);
        }
        const int T = 3;
        const auto est = inverse_series(g, T, grid);
        GegenbauerBasis basis(d, 2 * T + 1);
        for (std::size_t gi = 0; gi < grid->size(); gi += 7) {
            double direct = 0.0;
            for (int p = 0; p <= T; ++p) {
                double integral = 0.0;
                for (std::size_t j = 0; j < grid->size(); ++j)
                    integral += grid->weights[j] * g.values[j] *
                                basis.q(2 * p + 1, dot(grid->nodes[gi], grid->nodes[j]));
                direct += integral / lambda_coeff(d, p);
            }
            CHECK(est.values[gi] == doctest::Approx(direct).epsilon(1e-8));
        }
    }
}

TEST_CASE("monotone improvement in T on a generic smooth density (d=2)") {
    const auto grid = build_grid(2, 4096);
    const double theta0 = 0.8;
    SphericalFunction f;
    f.grid = grid;
    for (std::size_t i = 0; i < grid->size(); ++i) {
        const double a = node_angle(grid->nodes[i]);
        const double c = std::cos(a - theta0);
        f.values.push_back(c > 0.0 ? c * c : 0.0); // C^1, slow harmonic decay
    }
    const auto g = forward(f);
    const auto truth = odd_part(f);
    double prev = 1e9;
    for (int T : {3, 7, 15}) {
        const auto fm = inverse_series(g, T, grid);
        const double err = rel_l2_error(fm, truth.values);
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 0.01);
}

TEST_CASE("forward -> inverse -> reconstruct round trip, d=3") {
    const auto grid = build_grid(3, 48);
    // smooth density supported strictly inside {<theta, c> > 0}
    const Vec3 c{0.8, 0.6, 0.0};
    SphericalFunction f;
    f.grid = grid;
    double mass = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i) {
        const double u = dot(grid->nodes[i], c);
        const double v = u > 0.0 ? u * u * u * u : 0.0;
        f.values.push_back(v);
        mass += grid->weights[i] * v;
    }
    for (double& v : f.values) v /= mass;
    const auto g = forward(f);
    const auto fm = inverse_series(g, 15, grid);
    const auto rec = reconstruct_from_odd(fm, 1e-3);
    CHECK(rel_l2_error(rec, f.values) < 0.02);
}
