#pragma once

#include "hemisel/rng.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace hemisel {

/// Scalar law used for instruments, covariates and latent building blocks.
struct DistSpec {
    enum class Kind { normal, uniform, cauchy, student_t, point, uniform_normal_mix };
    Kind kind = Kind::normal;
    double a = 0.0;  // mean / lower / location / value
    double b = 1.0;  // sd / upper / scale
    int dof = 3;     // student_t only
    double c = 0.0;  // mix: normal mean
    double d = 1.0;  // mix: normal sd
    double w1 = 1.0; // mix: weight of the uniform component

    double sample(Rng& rng) const;
};

DistSpec dist_normal(double mean, double sd);
DistSpec dist_uniform(double lo, double hi);
DistSpec dist_cauchy(double loc, double scale);
DistSpec dist_student_t(int dof, double loc, double scale);
DistSpec dist_point(double value);
DistSpec dist_uniform_normal_mix(double lo, double hi, double mean, double sd,
                                 double uniform_weight);

/// Simulated sample plus the latent record each unit was generated from,
/// retained so tests can re-evaluate the selection indicator exactly.
struct SimulatedDataset {
    std::uint64_t seed = 0;
    std::string model;
    std::vector<double> y;
    std::vector<int> r;
    std::vector<std::vector<double>> z; // instruments, n x dz
    std::vector<std::vector<double>> x; // covariates, n x dx (may be empty)
    std::vector<std::string> latent_names;
    std::vector<std::vector<double>> latents; // n x latent_names.size()

    // Random-coefficients models also carry the sphere normalization
    // Gamma = (A,B)/|(A,B)| and S = (1,Z)/|(1,Z)|, each n x (dz+1).
    std::vector<std::vector<double>> gamma_norm;
    std::vector<std::vector<double>> s_norm;

    std::size_t size() const { return y.size(); }
};

struct HeckmanParams {
    std::vector<double> beta;   // outcome coefficients on X
    double sigma = 1.0;         // outcome error scale
    std::vector<double> gamma;  // selection coefficients on Z
    double rho = 0.0;           // corr(E_Y, E_R)
    std::vector<DistSpec> x_laws;
    std::vector<DistSpec> z_laws;
};

/// Y = X'beta + sigma E_Y, R = 1{Z'gamma - E_R > 0}, (E_Y, E_R) standard
/// bivariate normal with correlation rho.
SimulatedDataset simulate_heckman(const HeckmanParams& params, std::size_t n,
                                  std::uint64_t seed);

struct ThresholdModelSpec {
    // propensity pi(z) — keep both a callable form (library use) and a
    // parametric tag (CLI/serialization): probit pi = Phi(c0 + c'z).
    std::vector<double> propensity_coef; // c0, c1..c_dz
    // Gaussian copula between H and the outcome error; positive values couple
    // responding (low H) with high outcomes, so E[Y | R=1] > E[Y].
    double copula_rho = 0.0;
    double y_intercept = 0.0;
    std::vector<double> y_coef;          // on X
    double y_scale = 1.0;
    bool y_exp = false;                  // Y = exp(linear index + scale * error)
    std::vector<DistSpec> x_laws;
    std::vector<DistSpec> z_laws;

    double propensity(const std::vector<double>& z) const;
};

/// R = 1{pi(Z) > H} with H uniform(0,1) coupled to the outcome error by a
/// Gaussian copula; Z independent of (H, Y).
SimulatedDataset simulate_threshold(const ThresholdModelSpec& spec, std::size_t n,
                                    std::uint64_t seed);

/// One mixture component of the random-coefficients law: (A, B_1..B_dz, E)
/// jointly Gaussian with the given mean and covariance Cholesky factor;
/// Y = y_base + E.
struct RcGroup {
    double weight = 1.0;
    std::vector<double> mean;               // size dz + 2
    std::vector<std::vector<double>> chol;  // lower-triangular, same size
    double y_base = 0.0;
};

struct RandomCoefficientSpec {
    std::vector<RcGroup> groups;
    std::vector<DistSpec> z_laws;
};

/// R = 1{A + B'Z > 0}; a zero draw of (A,B) is rejected and redrawn. Emits
/// Gamma = (A,B)/|(A,B)| and S = (1,Z')/|(1,Z')| so that R = 1{Gamma'S > 0}
/// with S_1 > 0.
SimulatedDataset simulate_random_coefficients(const RandomCoefficientSpec& spec,
                                              std::size_t n, std::uint64_t seed);

struct ReparamSpec {
    std::vector<double> mean;              // (Theta, GammaBar_1.., E)
    std::vector<std::vector<double>> chol; // lower-triangular Cholesky
    double y_base = 0.0;
    DistSpec v_law;
    std::vector<DistSpec> zbar_laws;
};

/// R = 1{V - Theta - GammaBar'ZBar > 0}; z columns are (V, ZBar...).
SimulatedDataset simulate_reparam(const ReparamSpec& spec, std::size_t n,
                                  std::uint64_t seed);

/// Monte Carlo shares of the four response types under the exogenous shift
/// z -> z_prime with latents held fixed. Shares are nonnegative and sum to 1.
struct ResponseTypeShares {
    double always_taker = 0.0;
    double never_taker = 0.0;
    double complier = 0.0;
    double defier = 0.0;
};

ResponseTypeShares classify_response_types(const ThresholdModelSpec& spec,
                                           const std::vector<double>& z,
                                           const std::vector<double>& z_prime,
                                           std::size_t n, std::uint64_t seed);

ResponseTypeShares classify_response_types(const RandomCoefficientSpec& spec,
                                           const std::vector<double>& z,
                                           const std::vector<double>& z_prime,
                                           std::size_t n, std::uint64_t seed);

/// Cholesky factor of a symmetric positive definite matrix (row-major).
std::vector<std::vector<double>> cholesky(const std::vector<std::vector<double>>& cov);

} // namespace hemisel
