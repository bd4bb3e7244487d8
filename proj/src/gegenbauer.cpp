#include "hemisel/gegenbauer.hpp"

#include "hemisel/errors.hpp"

#include <cmath>
#include <numbers>

namespace hemisel {

namespace {
constexpr double kPi = std::numbers::pi;
}

double sphere_area(int d) {
    if (d < 1) throw capability_error("sphere_area: d must be >= 1");
    switch (d) {
        case 1: return 2.0;            // S^0: two points, counting measure
        case 2: return 2.0 * kPi;      // circle length
        case 3: return 4.0 * kPi;      // sphere area
        default: {
            // |S^{d-1}| = 2 pi^{d/2} / Gamma(d/2)
            return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d);
        }
    }
}

double harmonic_dim(int k, int d) {
    if (k < 0 || d < 2) throw capability_error("harmonic_dim: need k >= 0, d >= 2");
    if (k == 0) return 1.0;
    // (2k+d-2)/(k+d-2) * binom(k+d-2, d-2)
    double binom = 1.0;
    for (int j = 1; j <= d - 2; ++j) binom *= static_cast<double>(k + j) / j;
    return (2.0 * k + d - 2.0) / (k + d - 2.0) * binom;
}

GegenbauerBasis::GegenbauerBasis(int d, int kmax) : d_(d), mu_(0.5 * (d - 2)), kmax_(kmax) {
    if (d != 2 && d != 3) throw capability_error("GegenbauerBasis: only d in {2,3} supported");
    if (kmax < 1) throw std::domain_error("GegenbauerBasis: kmax must be >= 1");
}

std::vector<double> GegenbauerBasis::eval_all(double t) const {
    if (std::abs(t) > 1.0 + 1e-12) throw std::domain_error("gegenbauer: |t| > 1");
    t = std::clamp(t, -1.0, 1.0);
    std::vector<double> c(static_cast<std::size_t>(kmax_) + 1);
    c[0] = 1.0;
    if (d_ == 2) {
        // mu -> 0 limit: C_k^0 = (2/k) T_k for k >= 1; run the Chebyshev
        // recursion on T_k and rescale.
        double tkm1 = 1.0, tk = t;
        c[1] = 2.0 * t;
        for (int k = 2; k <= kmax_; ++k) {
            double tk1 = 2.0 * t * tk - tkm1;
            tkm1 = tk;
            tk = tk1;
            c[static_cast<std::size_t>(k)] = 2.0 / k * tk;
        }
    } else {
        c[1] = 2.0 * mu_ * t; // = t for d = 3
        for (int k = 0; k + 2 <= kmax_; ++k) {
            c[static_cast<std::size_t>(k) + 2] =
                (2.0 * (mu_ + k + 1) * t * c[static_cast<std::size_t>(k) + 1] -
                 (2.0 * mu_ + k) * c[static_cast<std::size_t>(k)]) /
                (k + 2.0);
        }
    }
    return c;
}

double GegenbauerBasis::eval(int k, double t) const {
    if (k < 0) throw std::domain_error("gegenbauer: negative degree");
    if (k > kmax_) throw capability_error("gegenbauer: degree exceeds kmax");
    return eval_all(t)[static_cast<std::size_t>(k)];
}

double GegenbauerBasis::q(int k, double t) const {
    if (k % 2 == 0) throw std::domain_error("q_{k,d}: k must be odd");
    if (k > kmax_) throw capability_error("q_{k,d}: degree exceeds kmax");
    const double ck = eval(k, t);
    const double ck1 = eval(k, 1.0);
    return harmonic_dim(k, d_) * ck / (sphere_area(d_) * ck1);
}

double lambda_coeff(int d, int p) {
    if (d < 2) throw capability_error("lambda_coeff: d must be >= 2");
    if (p < 0) throw std::domain_error("lambda_coeff: p must be >= 0");
    const double area = sphere_area(d - 1); // |S^{d-2}|
    double value = area / (d - 1.0);
    for (int j = 1; j <= p; ++j) {
        value *= -(2.0 * j - 1.0) / (d + 2.0 * j - 1.0);
    }
    return value;
}

SeriesCoefficients lambda_series(int d, int pmax) {
    SeriesCoefficients s;
    s.d = d;
    s.values.reserve(static_cast<std::size_t>(pmax) + 1);
    for (int p = 0; p <= pmax; ++p) s.values.push_back(lambda_coeff(d, p));
    return s;
}

} // namespace hemisel
