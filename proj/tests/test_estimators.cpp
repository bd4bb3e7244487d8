#include "hemisel/errors.hpp"
#include "hemisel/estimators.hpp"
#include "hemisel/gegenbauer.hpp"
#include "hemisel/rng.hpp"
#include "hemisel/selection_models.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace hemisel;

namespace {

constexpr double kPi = std::numbers::pi;

const Phi phi_id = [](double v) { return v; };
const Phi phi_one = [](double) { return 1.0; };

HeckmanParams heckman_design(double rho) {
    HeckmanParams p;
    p.sigma = 1.0;
    p.rho = rho;
    p.gamma = {1.0};
    // mass concentrated where the propensity is interior, thin full-support
    // tails so identification at infinity still holds
    p.z_laws = {dist_uniform_normal_mix(-1.3, 1.3, 0.0, 2.2, 0.85)};
    return p;
}

// two-group random-coefficients design with E[Y] = 2 by construction
// (B-symmetric latent law, shifted-Cauchy instrument)
RandomCoefficientSpec rc_symmetric() {
    RandomCoefficientSpec spec;
    RcGroup up;
    up.weight = 0.5;
    up.mean = {0.3, 0.9, 0.0};
    up.chol = cholesky({{0.36, 0.0, 0.24}, {0.0, 0.16, 0.0}, {0.24, 0.0, 1.0}});
    up.y_base = 2.0;
    RcGroup down = up;
    down.mean = {0.3, -0.9, 0.0};
    spec.groups = {up, down};
    spec.z_laws = {dist_cauchy(1.0, 1.0)};
    return spec;
}

} // namespace

TEST_CASE("propensity: trivial and Bernoulli cases") {
    std::vector<int> r(4000, 1);
    std::vector<std::vector<double>> z;
    Rng rng(2);
    for (int i = 0; i < 4000; ++i) z.push_back({rng.normal()});
    auto p = estimate_propensity(r, z, {{0.0}, {1.0}});
    CHECK(p[0] == doctest::Approx(1.0));
    CHECK(p[1] == doctest::Approx(1.0));

    for (auto& ri : r) ri = rng.uniform() < 0.4 ? 1 : 0;
    p = estimate_propensity(r, z, {{-0.5}, {0.4}});
    CHECK(p[0] == doctest::Approx(0.4).epsilon(0.12));
    CHECK(p[1] == doctest::Approx(0.4).epsilon(0.12));
}

TEST_CASE("propensity matches the normal CDF on Heckman data") {
    const auto ds = simulate_heckman(heckman_design(0.5), 100000, 19);
    std::vector<std::vector<double>> eval;
    for (double z = -1.3; z <= 1.3; z += 0.1) eval.push_back({z});
    const auto p = estimate_propensity(ds.r, ds.z, eval);
    double sup = 0.0;
    for (std::size_t g = 0; g < eval.size(); ++g)
        sup = std::max(sup, std::abs(p[g] - normal_cdf(eval[g][0])));
    CHECK(sup < 0.03);
}

TEST_CASE("mean_by_integral: MAR recovers the mean; indicator below support gives 0") {
    HeckmanParams design = heckman_design(0.0);
    design.beta = {1.7};
    design.x_laws = {dist_point(1.0)};
    const auto ds = simulate_heckman(design, 40000, 3);
    const auto res = mean_by_integral(ds.y, ds.r, ds.z, phi_id);
    // sd(Y) = 1, MC error ~ 3/sqrt(n_eff); allow estimator bias on top
    CHECK(res.estimate == doctest::Approx(1.7).epsilon(0.03));
    CHECK_FALSE(res.at_infinity_unreliable);

    const double ymin = *std::min_element(ds.y.begin(), ds.y.end());
    const auto zero = mean_by_integral(ds.y, ds.r, ds.z,
                                       [&](double v) { return v <= ymin - 1.0 ? 1.0 : 0.0; });
    CHECK(std::abs(zero.estimate) < 1e-12);
}

TEST_CASE("mean_by_integral: local IV curve and zero integral under rho = 0.8") {
    const auto ds = simulate_heckman(heckman_design(0.8), 100000, 101);
    const auto p_hat = estimate_propensity(ds.r, ds.z, ds.z);
    std::vector<double> grid;
    for (double p = 0.2; p <= 0.801; p += 0.05) grid.push_back(p);
    LocalPolyConfig iv_lp;
    iv_lp.bandwidth = 0.20;
    const auto curve = local_iv_curve(ds.y, ds.r, p_hat, phi_id, grid, iv_lp);
    double rms = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double target = 0.8 * normal_quantile(grid[g]);
        rms += (curve[g] - target) * (curve[g] - target);
    }
    rms = std::sqrt(rms / static_cast<double>(grid.size()));
    CHECK(rms < 0.05);

    const auto res = mean_by_integral_on_p(ds.y, ds.r, p_hat, phi_id);
    CHECK(std::abs(res.estimate) < 0.05);

    // the two routes agree within MC tolerance
    MeanIntegralConfig ep;
    ep.endpoint_route = true;
    const auto res2 = mean_by_integral_on_p(ds.y, ds.r, p_hat, phi_id, ep);
    CHECK(std::abs(res.estimate - res2.estimate) < 0.08);
}

TEST_CASE("at-infinity flag fires when the propensity support misses 1") {
    HeckmanParams design = heckman_design(0.3);
    design.z_laws = {dist_uniform(-0.8, 0.8)}; // pi capped at Phi(0.8) ~ .79
    const auto ds = simulate_heckman(design, 5000, 5);
    const auto res = mean_by_integral(ds.y, ds.r, ds.z, phi_id);
    CHECK(res.at_infinity_unreliable);
}

TEST_CASE("mean_at_boundary: unit response sums to 1 and recovers E[Y] = 2") {
    const auto ds = simulate_random_coefficients(rc_symmetric(), 50000, 61);
    const Vec3 s_tilde{0.0, 1.0, 0.0};
    const auto ones = mean_at_boundary(ds.y, ds.r, ds.s_norm, phi_one, s_tilde);
    CHECK(ones.estimate == doctest::Approx(1.0).epsilon(0.05));
    const auto mean = mean_at_boundary(ds.y, ds.r, ds.s_norm, phi_id, s_tilde);
    CHECK(mean.estimate == doctest::Approx(2.0).epsilon(0.06));
    CHECK(mean.n_pos >= 30);
    CHECK(mean.n_neg >= 30);

    // nonnegative phi gives a (numerically) nonnegative estimate
    const auto nn = mean_at_boundary(
        ds.y, ds.r, ds.s_norm, [](double v) { return v * v; }, s_tilde);
    CHECK(nn.estimate > -0.05);
}

TEST_CASE("mean_at_boundary: starved side raises a data error") {
    // samples concentrated near +s_tilde only
    std::vector<double> y;
    std::vector<int> r;
    std::vector<std::vector<double>> s;
    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
        const double psi = 1.45 + 0.08 * rng.uniform();
        s.push_back({std::cos(psi), std::sin(psi)});
        y.push_back(rng.normal());
        r.push_back(1);
    }
    BoundaryMeanConfig cfg;
    cfg.bandwidth = 0.1;
    CHECK_THROWS_WITH_AS(
        (void)mean_at_boundary(y, r, s, phi_id, Vec3{0.0, 1.0, 0.0}, cfg),
        doctest::Contains("negative"), data_error);
}

TEST_CASE("directional density: uniform half-circle, point mass mode, unit mass") {
    Rng rng(55);
    std::vector<std::vector<double>> s;
    for (int i = 0; i < 100000; ++i) {
        const double psi = kPi * (rng.uniform() - 0.5);
        s.push_back({std::cos(psi), std::sin(psi)});
    }
    const auto grid = build_grid(2, 512);
    const auto f = directional_density(s, 0.0, grid);
    CHECK(f.integral() == doctest::Approx(1.0).epsilon(1e-6));
    double sup_rel = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i) {
        if (grid->nodes[i][0] < 0.02) continue; // proper interior of H+
        sup_rel = std::max(sup_rel, std::abs(f.values[i] * kPi - 1.0));
    }
    CHECK(sup_rel < 0.10);
    // density vanishes outside the observed half-sphere
    for (std::size_t i = 0; i < grid->size(); ++i)
        if (grid->nodes[i][0] < -0.02) CHECK(f.values[i] == 0.0);

    // concentrated sample: mode at s0
    std::vector<std::vector<double>> conc;
    for (int i = 0; i < 2000; ++i) conc.push_back({std::cos(0.7), std::sin(0.7)});
    const auto g = directional_density(conc, 0.1, grid);
    std::size_t arg = 0;
    for (std::size_t i = 0; i < grid->size(); ++i)
        if (g.values[i] > g.values[arg]) arg = i;
    const double mode_angle = std::atan2(grid->nodes[arg][1], grid->nodes[arg][0]);
    CHECK(mode_angle == doctest::Approx(0.7).epsilon(0.05));
}

TEST_CASE("directional density on the d=3 half-sphere integrates to 1") {
    Rng rng(66);
    std::vector<std::vector<double>> s;
    for (int i = 0; i < 20000; ++i) {
        // uniform on H+ by rejection
        double v[3];
        double nrm = 0.0;
        do {
            nrm = 0.0;
            for (double& c : v) {
                c = rng.normal();
                nrm += c * c;
            }
        } while (nrm < 1e-12);
        nrm = std::sqrt(nrm);
        if (v[0] < 0.0) v[0] = -v[0];
        s.push_back({v[0] / nrm, v[1] / nrm, v[2] / nrm});
    }
    const auto grid = build_grid(3, 24);
    const auto f = directional_density(s, 0.0, grid);
    CHECK(f.integral() == doctest::Approx(1.0).epsilon(1e-6));
    // interior values near 2/|S^2|
    double worst = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i) {
        if (grid->nodes[i][0] < 0.25) continue;
        worst = std::max(worst,
                         std::abs(f.values[i] * 2.0 * kPi - 1.0));
    }
    CHECK(worst < 0.15);
}

TEST_CASE("series estimator: f_Gamma mass, mode location, separable outcome") {
    // Gamma peaked at gamma0 but broad enough for T = 7 to resolve; the
    // centered-Cauchy instrument makes S exactly uniform on the half-circle
    RandomCoefficientSpec spec;
    RcGroup g;
    g.weight = 1.0;
    const double ang0 = 0.9;
    g.mean = {1.6 * std::cos(ang0), 1.6 * std::sin(ang0), 0.0};
    g.chol = cholesky({{0.49, 0.0, 0.28}, {0.0, 0.49, 0.0}, {0.28, 0.0, 1.0}});
    g.y_base = 1.5;
    spec.groups = {g};
    spec.z_laws = {dist_cauchy(0.0, 1.0)};
    const auto ds = simulate_random_coefficients(spec, 100000, 202);

    const auto gamma_grid = build_grid(2, 256);
    const Vec3 s_tilde{0.0, 1.0, 0.0};
    const auto m1 = mean_at_boundary(ds.y, ds.r, ds.s_norm, phi_one, s_tilde);
    const auto est =
        series_coefficients(ds.y, ds.r, ds.s_norm, phi_one, gamma_grid, 7, m1.estimate);

    CHECK_FALSE(est.drop_warning);
    // mass ~ 1
    CHECK(est.root.integral() == doctest::Approx(1.0).epsilon(0.05));
    // mode within geodesic 0.2 of gamma0
    std::size_t arg = 0;
    for (std::size_t i = 0; i < gamma_grid->size(); ++i)
        if (est.root.values[i] > est.root.values[arg]) arg = i;
    const Vec3 gamma0{std::cos(ang0), std::sin(ang0), 0.0};
    CHECK(std::acos(std::clamp(dot(gamma_grid->nodes[arg], gamma0), -1.0, 1.0)) < 0.2);
    // root_odd is odd
    for (std::size_t i = 0; i < gamma_grid->size(); ++i)
        CHECK(std::abs(est.root_odd.values[i] +
                       est.root_odd.values[gamma_grid->antipode[i]]) < 1e-8);

    // separable case: Y independent of Gamma => root ~ E[Y] f_Gamma
    RandomCoefficientSpec sep = spec;
    sep.groups[0].chol =
        cholesky({{0.49, 0.0, 0.0}, {0.0, 0.49, 0.0}, {0.0, 0.0, 0.09}});
    const auto ds2 = simulate_random_coefficients(sep, 100000, 203);
    const auto m1b = mean_at_boundary(ds2.y, ds2.r, ds2.s_norm, phi_one, s_tilde);
    const auto mY = mean_at_boundary(ds2.y, ds2.r, ds2.s_norm, phi_id, s_tilde);
    const auto f_est =
        series_coefficients(ds2.y, ds2.r, ds2.s_norm, phi_one, gamma_grid, 7, m1b.estimate);
    const auto yf_est =
        series_coefficients(ds2.y, ds2.r, ds2.s_norm, phi_id, gamma_grid, 7, mY.estimate);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < gamma_grid->size(); ++i) {
        const double w = gamma_grid->weights[i];
        const double diff = yf_est.root.values[i] - 1.5 * f_est.root.values[i];
        num += w * diff * diff;
        den += w * (1.5 * f_est.root.values[i]) * (1.5 * f_est.root.values[i]);
    }
    CHECK(std::sqrt(num / den) < 0.15);
}

TEST_CASE("series estimator on d=3 runs and returns an odd root") {
    Rng rng(47);
    std::vector<double> y;
    std::vector<int> r;
    std::vector<std::vector<double>> s;
    for (int i = 0; i < 5000; ++i) {
        double v[3];
        double nrm = 0.0;
        do {
            nrm = 0.0;
            for (double& c : v) {
                c = rng.normal();
                nrm += c * c;
            }
        } while (nrm < 1e-12);
        nrm = std::sqrt(nrm);
        if (v[0] < 0.0) v[0] = -v[0];
        s.push_back({v[0] / nrm, v[1] / nrm, v[2] / nrm});
        y.push_back(rng.normal(1.0, 0.3));
        r.push_back(rng.uniform() < 0.6 ? 1 : 0);
    }
    const auto gamma_grid = build_grid(3, 12);
    const auto est = series_coefficients(y, r, s, phi_one, gamma_grid, 2, 1.0);
    REQUIRE(est.coefficients.size() == 3);
    for (std::size_t i = 0; i < gamma_grid->size(); ++i)
        CHECK(std::abs(est.root_odd.values[i] +
                       est.root_odd.values[gamma_grid->antipode[i]]) < 1e-8);
}

TEST_CASE("series estimator is permutation invariant (exact)") {
    const auto ds = simulate_random_coefficients(rc_symmetric(), 4000, 17);
    const auto gamma_grid = build_grid(2, 64);
    const auto base =
        series_coefficients(ds.y, ds.r, ds.s_norm, phi_id, gamma_grid, 3, 2.0);
    // reversed sample order
    std::vector<double> y(ds.y.rbegin(), ds.y.rend());
    std::vector<int> r(ds.r.rbegin(), ds.r.rend());
    std::vector<std::vector<double>> s(ds.s_norm.rbegin(), ds.s_norm.rend());
    const auto rev = series_coefficients(y, r, s, phi_id, gamma_grid, 3, 2.0);
    CHECK(base.root_odd.values == rev.root_odd.values);
}

TEST_CASE("nonrespondent cdf: exogenous case matches the respondents' law") {
    ThresholdModelSpec spec;
    spec.propensity_coef = {0.3, 1.0};
    spec.copula_rho = 0.0;
    spec.z_laws = {dist_normal(0.0, 1.5)};
    const auto ds = simulate_threshold(spec, 100000, 404);
    std::vector<double> t_grid;
    for (double t = -3.5; t <= 3.5; t += 0.05) t_grid.push_back(t);
    const auto est =
        nonrespondent_cdf(ds.y, ds.r, ds.z, t_grid, CdfMethod::scalar_threshold);
    // respondents' empirical CDF
    std::vector<double> y1;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds.r[i]) y1.push_back(ds.y[i]);
    std::sort(y1.begin(), y1.end());
    double ks = 0.0;
    for (std::size_t g = 0; g < t_grid.size(); ++g) {
        const double emp =
            static_cast<double>(std::upper_bound(y1.begin(), y1.end(), t_grid[g]) -
                                y1.begin()) /
            static_cast<double>(y1.size());
        ks = std::max(ks, std::abs(est.values[g] - emp));
    }
    CHECK(ks < 0.05);
    // monotone in [0,1], endpoints near 0 and 1
    for (std::size_t g = 1; g < est.values.size(); ++g)
        CHECK(est.values[g] >= est.values[g - 1]);
    CHECK(est.values.front() < 0.02);
    CHECK(est.values.back() > 0.95);
    CHECK(est.values.back() <= 1.0);
}

TEST_CASE("nonrespondent cdf refuses complete frames") {
    std::vector<double> y(100, 1.0);
    std::vector<int> r(100, 1);
    std::vector<std::vector<double>> z(100, std::vector<double>{0.0});
    CHECK_THROWS_AS(
        (void)nonrespondent_cdf(y, r, z, {0.0, 1.0}, CdfMethod::scalar_threshold),
        data_error);
}

TEST_CASE("isotonic projection") {
    CHECK(isotonic({1.0, 2.0, 3.0}) == std::vector<double>{1.0, 2.0, 3.0});
    const auto flat = isotonic({3.0, 1.0, 2.0});
    CHECK(flat[0] == doctest::Approx(2.0));
    CHECK(flat[1] == doctest::Approx(2.0));
    CHECK(flat[2] == doctest::Approx(2.0));
    const auto mix = isotonic({0.0, 0.5, 0.4, 0.6});
    CHECK(mix[1] == doctest::Approx(0.45));
    CHECK(mix[2] == doctest::Approx(0.45));
}
