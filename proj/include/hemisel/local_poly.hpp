#pragma once

#include <cstddef>
#include <vector>

namespace hemisel {

struct LocalPolyConfig {
    double bandwidth = 0.0; // <= 0: Silverman-style rule of thumb
    int degree = 1;         // 0 (Nadaraya-Watson) or 1 (local linear)
    std::size_t min_points = 5;
};

struct LocalPolyResult {
    std::vector<double> values;
    std::vector<double> derivatives;     // zeros when degree = 0
    std::vector<char> widened;           // per point, 1 if bandwidth fallback fired
    double bandwidth_used = 0.0;
};

/// Rule-of-thumb bandwidth: 1.06 * min(sd, IQR/1.349) * n^{-1/5}.
double silverman_bandwidth(const std::vector<double>& xs);

/// Weighted least squares fit of degree 0 or 1 in an Epanechnikov window
/// around each evaluation point; empty windows widen the bandwidth until
/// min_points samples are covered (flagged per point).
LocalPolyResult local_poly(const std::vector<double>& xs, const std::vector<double>& ys,
                           const std::vector<double>& eval_points,
                           const LocalPolyConfig& config = {});

/// Linear-functional weights of the local linear smoother: omega such that,
/// for any response vector resp (aligned with xs),
///   sum_i omega_i resp_i = sum_g [cv_g m_hat(e_g) + cd_g m_hat'(e_g)]
/// with m_hat the local linear fit of resp on xs. Used to evaluate many
/// response vectors against one design cheaply.
std::vector<double> local_linear_functional_weights(
    const std::vector<double>& xs, const std::vector<double>& eval_points,
    const std::vector<double>& value_coef, const std::vector<double>& deriv_coef,
    const LocalPolyConfig& config = {});

/// Nadaraya-Watson regression with a scalar regressor, O((n + m) log n) via
/// prefix sums of the Epanechnikov moments.
std::vector<double> nw_regression_sorted(const std::vector<double>& xs_sorted,
                                         const std::vector<double>& ys_sorted,
                                         const std::vector<double>& eval_points,
                                         double bandwidth);

struct LocalPoly2dConfig {
    double bandwidth_x = 0.0;
    double bandwidth_z = 0.0;
    std::size_t min_points = 12;
};

/// Local linear fit of resp on (x, z) with a product Epanechnikov kernel;
/// returns the fitted value and the partial derivative in x at each
/// evaluation pair. Samples must be sorted by z.
void local_linear_2d(const std::vector<double>& x, const std::vector<double>& z,
                     const std::vector<double>& resp,
                     const std::vector<double>& eval_x, const std::vector<double>& eval_z,
                     const LocalPoly2dConfig& config, std::vector<double>& values,
                     std::vector<double>& dx);

} // namespace hemisel
