#pragma once

#include "hemisel/estimators.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hemisel {

/// One survey unit. y is absent exactly when r = 0; weight is the design
/// weight 1/P(i in S) >= 1.
struct SurveyRecord {
    long long id = 0;
    std::optional<double> y;
    int r = 1;
    double weight = 1.0;
    std::vector<double> z;
    std::vector<double> x;
};

struct SurveyFrame {
    std::vector<SurveyRecord> records;
    std::size_t z_dim = 0;
    std::size_t x_dim = 0;

    std::size_t size() const { return records.size(); }
    std::size_t respondents() const;
};

/// CSV schema: id,y,r,weight,z_1..z_k,x_1..x_m; y empty iff r = 0.
void write_survey_csv(std::ostream& os, const SurveyFrame& frame);
SurveyFrame read_survey_csv(std::istream& is);

struct GiniResult {
    double estimate = 0.0;
    double variance = 0.0;
    std::string method;
};

/// Weighted Gini with midpoint ranks:
///   w_j = pi_j / sum pi,  r(i) = sum_j w_j (1{y_j < y_i} + 1/2 1{y_j = y_i}),
///   G = sum_i pi_i (2 r(i) - 1) y_i / sum_i pi_i y_i.
/// Requires y >= 0 and a nonzero weighted total. O(n log n).
double weighted_gini(const std::vector<double>& y, const std::vector<double>& weight);

/// Brute-force check value sum_ij pi_i pi_j |y_i - y_j| / (2 (sum pi)(sum pi y)).
/// O(n^2); kept as an independent oracle for the estimator above.
double gini_pairwise_oracle(const std::vector<double>& y,
                            const std::vector<double>& weight);

/// With-replacement bootstrap variance of the weighted Gini (records carry
/// their weights into each resample). B >= 50.
double bootstrap_variance(const std::vector<double>& y, const std::vector<double>& weight,
                          std::size_t n_boot, std::uint64_t seed);

/// Delete-one jackknife variance (flagged alternative, O(n^2)).
double jackknife_variance(const std::vector<double>& y, const std::vector<double>& weight);

/// estimate + sqrt(variance) * eps with eps standard normal.
double normal_draw(double estimate, double variance, std::uint64_t seed);

/// Equal-tailed empirical quantile interval at level 1 - alpha.
std::pair<double, double> confidence_interval(const std::vector<double>& replicates,
                                              double alpha);

enum class ImputeMethod { scalar_threshold, boundary };
enum class VarianceMethod { bootstrap, jackknife };

struct ImputeConfig {
    ImputeMethod method = ImputeMethod::scalar_threshold;
    CdfConfig cdf{};
    std::size_t t_grid_size = 512;
    std::size_t n_boot = 200;
    VarianceMethod variance = VarianceMethod::bootstrap;
};

struct ImputationReport {
    std::vector<double> replicates; // G~_t
    double lower = 0.0;
    double upper = 0.0;
    double alpha = 0.1;
    double point = 0.0;          // Gini of a single completed dataset (t = 1)
    double naive_estimate = 0.0; // respondents-only Gini
    std::uint64_t seed = 0;
    bool degenerate_no_missing = false;
    std::size_t n_missing = 0;
};

/// Multiple imputation for the Gini index: estimate F(.|R=0) once from the
/// frame, then per replicate draw the nonrespondents' outcomes by inverse-CDF
/// sampling, compute the weighted Gini, add sqrt(var_hat) * eps_t, and report
/// the equal-tailed interval of the replicates.
ImputationReport multiple_impute(const SurveyFrame& frame, const ImputeConfig& config,
                                 std::size_t n_replicates, double alpha,
                                 std::uint64_t seed);

/// t-grid used for the imputation CDF: 512 points spanning
/// [min(y_obs) - 3 IQR, max(y_obs) + 3 IQR].
std::vector<double> default_t_grid(const std::vector<double>& y_obs, std::size_t size);

/// Inverse of a tabulated CDF by linear interpolation; draws stay within the
/// grid hull.
double inverse_cdf_draw(const std::vector<double>& t_grid, const std::vector<double>& cdf,
                        double u);

} // namespace hemisel
