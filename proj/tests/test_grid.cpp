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
}

TEST_CASE("d=2 grid: equal weights, unit nodes, antipodal closure") {
    const auto grid = build_grid(2, 360);
    CHECK(grid->size() == 360);
    double wsum = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i) {
        CHECK(grid->weights[i] == doctest::Approx(2.0 * kPi / 360.0).epsilon(1e-14));
        wsum += grid->weights[i];
        const auto& nd = grid->nodes[i];
        CHECK(std::abs(std::sqrt(dot(nd, nd)) - 1.0) < 1e-12);
        const auto& anti = grid->nodes[grid->antipode[i]];
        CHECK(std::abs(nd[0] + anti[0]) < 1e-12);
        CHECK(std::abs(nd[1] + anti[1]) < 1e-12);
    }
    CHECK(wsum == doctest::Approx(2.0 * kPi).epsilon(1e-12));
}

TEST_CASE("d=3 grid: area, unit nodes, antipodal closure") {
    const auto grid = build_grid(3, 64);
    double wsum = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i) {
        wsum += grid->weights[i];
        const auto& nd = grid->nodes[i];
        CHECK(std::abs(std::sqrt(dot(nd, nd)) - 1.0) < 1e-12);
        const auto& anti = grid->nodes[grid->antipode[i]];
        CHECK(std::abs(nd[0] + anti[0]) < 1e-12);
        CHECK(std::abs(nd[1] + anti[1]) < 1e-12);
        CHECK(std::abs(nd[2] + anti[2]) < 1e-12);
    }
    CHECK(std::abs(wsum - 4.0 * kPi) < 1e-10);
}

TEST_CASE("constant integrates to the sphere area on every grid") {
    for (int d : {2, 3}) {
        const auto grid = build_grid(d, d == 2 ? 256 : 32);
        std::vector<double> ones(grid->size(), 1.0);
        CHECK(integrate(*grid, ones) == doctest::Approx(sphere_area(d)).epsilon(1e-12));
        const auto hemi = build_hemisphere_grid(d, 32);
        std::vector<double> h1(hemi->size(), 1.0);
        CHECK(integrate(*hemi, h1) ==
              doctest::Approx(0.5 * sphere_area(d)).epsilon(1e-12));
    }
}

TEST_CASE("quadrature exactness for low-degree polynomials, d=3") {
    const auto grid = build_grid(3, 32);
    // monomials of total degree <= 5: odd ones vanish, check a mixed set
    auto moment = [&](int a, int b, int c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < grid->size(); ++i) {
            const auto& s = grid->nodes[i];
            acc += grid->weights[i] * std::pow(s[0], a) * std::pow(s[1], b) *
                   std::pow(s[2], c);
        }
        return acc;
    };
    CHECK(std::abs(moment(1, 0, 0)) < 1e-8);
    CHECK(std::abs(moment(3, 1, 1)) < 1e-8);
    CHECK(moment(2, 0, 0) == doctest::Approx(4.0 * kPi / 3.0).epsilon(1e-8));
    CHECK(moment(4, 0, 0) == doctest::Approx(4.0 * kPi / 5.0).epsilon(1e-8));
    CHECK(moment(2, 2, 0) == doctest::Approx(4.0 * kPi / 15.0).epsilon(1e-8));
}

TEST_CASE("build_grid guards") {
    CHECK_THROWS_AS(build_grid(4, 32), capability_error);
    CHECK_THROWS_AS(build_grid(2, 4), std::domain_error);
}

TEST_CASE("hemisphere_q_integral: closed forms and quadrature oracle") {
    // closed form: int_{H+} q_k(gamma.s) ds = lambda_k q_k(gamma_1)
    const auto hemi3 = build_hemisphere_grid(3, 48);
    const Vec3 e1{1.0, 0.0, 0.0};
    CHECK(hemisphere_q_integral(3, 0, e1, *hemi3) == doctest::Approx(0.75).epsilon(1e-10));
    const Vec3 perp{0.0, 1.0, 0.0};
    CHECK(std::abs(hemisphere_q_integral(3, 0, perp, *hemi3)) < 1e-10);
    GegenbauerBasis leg(3, 9);
    for (int p = 0; p <= 4; ++p) {
        const Vec3 g{0.6, 0.64, std::sqrt(1.0 - 0.36 - 0.4096)};
        const double expected = lambda_coeff(3, p) * leg.q(2 * p + 1, g[0]);
        CHECK(hemisphere_q_integral(3, p, g, *hemi3) ==
              doctest::Approx(expected).epsilon(1e-8));
    }

    // d=2: brute-force fine-grid quadrature of q_{1,2}(cos(phi - alpha))
    const auto hemi2 = build_hemisphere_grid(2, 64);
    GegenbauerBasis cheb(2, 3);
    const double alpha = 0.37;
    const Vec3 gamma{std::cos(alpha), std::sin(alpha), 0.0};
    const int nfine = 200000;
    double brute = 0.0;
    for (int j = 0; j < nfine; ++j) {
        const double phi = -0.5 * kPi + kPi * (j + 0.5) / nfine;
        brute += (kPi / nfine) * cheb.q(1, std::cos(phi - alpha));
    }
    CHECK(hemisphere_q_integral(2, 0, gamma, *hemi2) ==
          doctest::Approx(brute).epsilon(1e-7));
    // and the closed form for several p
    for (int p = 0; p <= 3; ++p) {
        GegenbauerBasis basis(2, 2 * p + 1);
        const double expected = lambda_coeff(2, p) * basis.q(2 * p + 1, gamma[0]);
        CHECK(hemisphere_q_integral(2, p, gamma, *hemi2) ==
              doctest::Approx(expected).epsilon(1e-8));
    }
}
