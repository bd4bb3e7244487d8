#include "hemisel/errors.hpp"
#include "hemisel/rng.hpp"
#include "hemisel/survey.hpp"

#include <doctest.h>

#include <cmath>

using namespace hemisel;

TEST_CASE("gini hand values") {
    CHECK(weighted_gini({1, 1, 1}, {1, 1, 1}) == doctest::Approx(0.0));
    CHECK(weighted_gini({1, 2, 3}, {1, 1, 1}) == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
    CHECK(weighted_gini({0, 1}, {1, 1}) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(gini_pairwise_oracle({1, 2, 3}, {1, 1, 1}) ==
          doctest::Approx(2.0 / 9.0).epsilon(1e-14));
    CHECK(gini_pairwise_oracle({5.0}, {2.0}) == doctest::Approx(0.0));
}

TEST_CASE("gini equals the pairwise oracle on random weighted samples with ties") {
    Rng rng(404);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.below(60));
        std::vector<double> y(n), w(n);
        for (std::size_t i = 0; i < n; ++i) {
            // ~30% ties via rounding to one decimal
            double v = rng.uniform(0.0, 10.0);
            if (rng.uniform() < 0.3) v = std::round(v * 10.0) / 10.0;
            y[i] = v;
            w[i] = rng.uniform() < 0.5 ? 1.0 : rng.uniform(0.5, 5.0);
        }
        CHECK(weighted_gini(y, w) ==
              doctest::Approx(gini_pairwise_oracle(y, w)).epsilon(1e-12));
    }
}

TEST_CASE("gini invariances") {
    Rng rng(7);
    std::vector<double> y, w;
    for (int i = 0; i < 200; ++i) {
        y.push_back(rng.uniform(0.0, 3.0));
        w.push_back(rng.uniform(1.0, 4.0));
    }
    const double base = weighted_gini(y, w);
    // scale invariance: exact for exactly-representable scalings
    std::vector<double> y2 = y;
    for (double& v : y2) v *= 16.0;
    CHECK(weighted_gini(y2, w) == base);
    std::vector<double> y17 = y;
    for (double& v : y17) v *= 17.0;
    CHECK(weighted_gini(y17, w) == doctest::Approx(base).epsilon(1e-14));
    // weight replication invariance: duplicate a record with halved weights
    std::vector<double> y3 = y, w3 = w;
    y3.push_back(y[0]);
    w3.push_back(0.5 * w[0]);
    w3[0] *= 0.5;
    CHECK(weighted_gini(y3, w3) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("gini population limit: uniform(0,1) gives 1/3") {
    Rng rng(2024);
    std::vector<double> y, w;
    for (int i = 0; i < 100000; ++i) {
        y.push_back(rng.uniform());
        w.push_back(1.0);
    }
    CHECK(weighted_gini(y, w) == doctest::Approx(1.0 / 3.0).epsilon(0.01));
}

TEST_CASE("gini error paths") {
    CHECK_THROWS_AS((void)weighted_gini({-1.0, 2.0}, {1.0, 1.0}), data_error);
    CHECK_THROWS_AS((void)weighted_gini({0.0, 0.0}, {1.0, 1.0}), data_error);
}

TEST_CASE("bootstrap variance: constant outcome, consistency in n") {
    std::vector<double> yc(500, 2.0), wc(500, 1.0);
    CHECK(bootstrap_variance(yc, wc, 80, 9) == doctest::Approx(0.0));

    Rng rng(71);
    auto draw = [&](std::size_t n) {
        std::vector<double> y(n), w(n, 1.0);
        for (auto& v : y) v = rng.uniform();
        return std::make_pair(y, w);
    };
    const auto small = draw(500);
    const auto big = draw(2000);
    const double vs = bootstrap_variance(small.first, small.second, 300, 1);
    const double vb = bootstrap_variance(big.first, big.second, 300, 2);
    CHECK(vb < vs);
    CHECK_THROWS_AS((void)bootstrap_variance(yc, wc, 10, 1), std::domain_error);
}

TEST_CASE("bootstrap variance is within a factor 2 of the outer MC truth") {
    // uniform(0,1) population, n = 2000: sd over independent samples vs the
    // bootstrap estimate on one sample
    Rng rng(555);
    std::vector<double> gs;
    std::vector<double> w(2000, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> y(2000);
        for (auto& v : y) v = rng.uniform();
        gs.push_back(weighted_gini(y, w));
    }
    double mean = 0.0;
    for (double g : gs) mean += g;
    mean /= static_cast<double>(gs.size());
    double truth = 0.0;
    for (double g : gs) truth += (g - mean) * (g - mean);
    truth /= static_cast<double>(gs.size() - 1);

    std::vector<double> y(2000);
    for (auto& v : y) v = rng.uniform();
    const double est = bootstrap_variance(y, w, 500, 31);
    CHECK(est > 0.5 * truth);
    CHECK(est < 2.0 * truth);
}

TEST_CASE("jackknife variance roughly agrees with bootstrap") {
    Rng rng(808);
    std::vector<double> y(300), w(300, 1.0);
    for (auto& v : y) v = rng.uniform(0.0, 2.0);
    const double jk = jackknife_variance(y, w);
    const double bs = bootstrap_variance(y, w, 400, 4);
    CHECK(jk > 0.3 * bs);
    CHECK(jk < 3.0 * bs);
}

TEST_CASE("normal draw moments and degenerate variance") {
    CHECK(normal_draw(0.7, 0.0, 99) == 0.7);
    double sum = 0.0, sum2 = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double d = normal_draw(1.0, 4.0, 1000 + static_cast<std::uint64_t>(i));
        sum += d;
        sum2 += d * d;
    }
    const double mean = sum / n;
    CHECK(std::abs(mean - 1.0) < 3.0 * 2.0 / std::sqrt(static_cast<double>(n)));
    CHECK(sum2 / n - mean * mean == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("confidence interval quantiles") {
    CHECK(confidence_interval({3.0, 3.0, 3.0, 3.0}, 0.1) ==
          std::pair<double, double>{3.0, 3.0});
    Rng rng(5150);
    std::vector<double> reps(100000);
    for (auto& v : reps) v = rng.normal();
    const auto ci = confidence_interval(reps, 0.1);
    CHECK(ci.first == doctest::Approx(-1.6449).epsilon(0.02));
    CHECK(ci.second == doctest::Approx(1.6449).epsilon(0.02));
    const auto minmax = confidence_interval(reps, 0.0);
    CHECK(minmax.first ==
          doctest::Approx(*std::min_element(reps.begin(), reps.end())));
    CHECK(minmax.second ==
          doctest::Approx(*std::max_element(reps.begin(), reps.end())));
}
