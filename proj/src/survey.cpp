#include "hemisel/survey.hpp"

#include "hemisel/errors.hpp"
#include "hemisel/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace hemisel {

std::size_t SurveyFrame::respondents() const {
    std::size_t k = 0;
    for (const auto& rec : records) k += rec.r ? 1 : 0;
    return k;
}

namespace {

void write_double(std::ostream& os, double v) {
    std::ostringstream tmp;
    tmp << std::setprecision(17) << v;
    os << tmp.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, std::size_t lineno, const char* field) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw data_error("line " + std::to_string(lineno) + ": cannot parse " + field +
                         " value '" + s + "'");
    return v;
}

} // namespace

void write_survey_csv(std::ostream& os, const SurveyFrame& frame) {
    os << "id,y,r,weight";
    for (std::size_t j = 0; j < frame.z_dim; ++j) os << ",z_" << (j + 1);
    for (std::size_t j = 0; j < frame.x_dim; ++j) os << ",x_" << (j + 1);
    os << "\n";
    for (const auto& rec : frame.records) {
        os << rec.id << ",";
        if (rec.y) write_double(os, *rec.y);
        os << "," << rec.r << ",";
        write_double(os, rec.weight);
        for (std::size_t j = 0; j < frame.z_dim; ++j) {
            os << ",";
            write_double(os, j < rec.z.size() ? rec.z[j] : 0.0);
        }
        for (std::size_t j = 0; j < frame.x_dim; ++j) {
            os << ",";
            write_double(os, j < rec.x.size() ? rec.x[j] : 0.0);
        }
        os << "\n";
    }
}

SurveyFrame read_survey_csv(std::istream& is) {
    SurveyFrame frame;
    std::string line;
    if (!std::getline(is, line)) throw data_error("line 1: missing CSV header");
    const auto header = split_csv_line(line);
    if (header.size() < 4 || header[0] != "id" || header[1] != "y" || header[2] != "r" ||
        header[3] != "weight")
        throw data_error("line 1: header must start with id,y,r,weight");
    std::size_t zd = 0, xd = 0;
    for (std::size_t j = 4; j < header.size(); ++j) {
        if (header[j].rfind("z_", 0) == 0)
            ++zd;
        else if (header[j].rfind("x_", 0) == 0)
            ++xd;
        else if (header[j].rfind("lat_", 0) == 0)
            continue; // sidecar latent columns are ignored on read
        else
            throw data_error("line 1: unexpected column '" + header[j] + "'");
    }
    frame.z_dim = zd;
    frame.x_dim = xd;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw data_error("line " + std::to_string(lineno) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(cells.size()));
        SurveyRecord rec;
        rec.id = static_cast<long long>(parse_double(cells[0], lineno, "id"));
        rec.r = static_cast<int>(parse_double(cells[2], lineno, "r"));
        if (rec.r != 0 && rec.r != 1)
            throw data_error("line " + std::to_string(lineno) + ": r must be 0 or 1");
        if (cells[1].empty()) {
            if (rec.r != 0)
                throw data_error("line " + std::to_string(lineno) + ": y empty but r = 1");
        } else {
            if (rec.r != 1)
                throw data_error("line " + std::to_string(lineno) + ": y present but r = 0");
            rec.y = parse_double(cells[1], lineno, "y");
        }
        rec.weight = parse_double(cells[3], lineno, "weight");
        if (!(rec.weight > 0.0))
            throw data_error("line " + std::to_string(lineno) + ": weight must be positive");
        std::size_t col = 4;
        for (std::size_t j = 0; j < zd; ++j)
            rec.z.push_back(parse_double(cells[col++], lineno, "z"));
        for (std::size_t j = 0; j < xd; ++j)
            rec.x.push_back(parse_double(cells[col++], lineno, "x"));
        frame.records.push_back(std::move(rec));
    }
    return frame;
}

double weighted_gini(const std::vector<double>& y, const std::vector<double>& weight) {
    const std::size_t n = y.size();
    if (weight.size() != n || n == 0) throw data_error("weighted_gini: size mismatch");
    double wsum = 0.0, wy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (y[i] < 0.0) throw data_error("weighted_gini: negative outcome");
        if (!(weight[i] > 0.0)) throw data_error("weighted_gini: nonpositive weight");
        wsum += weight[i];
        wy += weight[i] * y[i];
    }
    if (wy == 0.0) throw data_error("weighted_gini: zero weighted total");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (y[a] != y[b]) return y[a] < y[b];
        return weight[a] < weight[b];
    });

    // midpoint ranks: groups of tied outcomes share rank below + half of own
    double num = 0.0;
    double below = 0.0; // total weight strictly below the current tie group
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        double group_w = 0.0;
        while (j < n && y[order[j]] == y[order[i]]) {
            group_w += weight[order[j]];
            ++j;
        }
        const double rank = (below + 0.5 * group_w) / wsum;
        for (std::size_t k = i; k < j; ++k)
            num += weight[order[k]] * (2.0 * rank - 1.0) * y[order[k]];
        below += group_w;
        i = j;
    }
    return num / wy;
}

double gini_pairwise_oracle(const std::vector<double>& y,
                            const std::vector<double>& weight) {
    const std::size_t n = y.size();
    if (weight.size() != n || n == 0) throw data_error("gini_pairwise_oracle: size mismatch");
    double wsum = 0.0, wy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (y[i] < 0.0) throw data_error("gini_pairwise_oracle: negative outcome");
        wsum += weight[i];
        wy += weight[i] * y[i];
    }
    if (wy == 0.0) throw data_error("gini_pairwise_oracle: zero weighted total");
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            acc += weight[i] * weight[j] * std::abs(y[i] - y[j]);
    return acc / (2.0 * wsum * wy);
}

double bootstrap_variance(const std::vector<double>& y, const std::vector<double>& weight,
                          std::size_t n_boot, std::uint64_t seed) {
    const std::size_t n = y.size();
    if (n_boot < 50) throw std::domain_error("bootstrap_variance: need B >= 50");
    if (n == 0) throw data_error("bootstrap_variance: empty sample");
    Rng rng(seed);
    std::vector<double> gs;
    gs.reserve(n_boot);
    std::vector<double> yb(n), wb(n);
    for (std::size_t b = 0; b < n_boot; ++b) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k = static_cast<std::size_t>(rng.below(n));
            yb[i] = y[k];
            wb[i] = weight[k];
        }
        gs.push_back(weighted_gini(yb, wb));
    }
    double mean = 0.0;
    for (double g : gs) mean += g;
    mean /= static_cast<double>(n_boot);
    double var = 0.0;
    for (double g : gs) var += (g - mean) * (g - mean);
    return var / static_cast<double>(n_boot - 1);
}

double jackknife_variance(const std::vector<double>& y, const std::vector<double>& weight) {
    const std::size_t n = y.size();
    if (n < 2) throw data_error("jackknife_variance: need n >= 2");
    std::vector<double> gs(n);
    std::vector<double> yd(n - 1), wd(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t k = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            yd[k] = y[j];
            wd[k] = weight[j];
            ++k;
        }
        gs[i] = weighted_gini(yd, wd);
    }
    double mean = 0.0;
    for (double g : gs) mean += g;
    mean /= static_cast<double>(n);
    double acc = 0.0;
    for (double g : gs) acc += (g - mean) * (g - mean);
    return acc * static_cast<double>(n - 1) / static_cast<double>(n);
}

double normal_draw(double estimate, double variance, std::uint64_t seed) {
    if (variance < 0.0) throw std::domain_error("normal_draw: variance must be >= 0");
    Rng rng(seed);
    return estimate + std::sqrt(variance) * rng.normal();
}

std::pair<double, double> confidence_interval(const std::vector<double>& replicates,
                                              double alpha) {
    if (replicates.empty()) throw data_error("confidence_interval: no replicates");
    std::vector<double> sorted = replicates;
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(sorted.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
    };
    return {quantile(0.5 * alpha), quantile(1.0 - 0.5 * alpha)};
}

std::vector<double> default_t_grid(const std::vector<double>& y_obs, std::size_t size) {
    if (y_obs.empty()) throw data_error("default_t_grid: no observed outcomes");
    std::vector<double> sorted = y_obs;
    std::sort(sorted.begin(), sorted.end());
    const double q1 = sorted[static_cast<std::size_t>(0.25 * (sorted.size() - 1))];
    const double q3 = sorted[static_cast<std::size_t>(0.75 * (sorted.size() - 1))];
    double iqr = q3 - q1;
    if (iqr <= 0.0) iqr = std::max(1.0, std::abs(sorted.back() - sorted.front()));
    const double lo = sorted.front() - 3.0 * iqr;
    const double hi = sorted.back() + 3.0 * iqr;
    std::vector<double> grid(size);
    for (std::size_t g = 0; g < size; ++g)
        grid[g] = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(size - 1);
    return grid;
}

double inverse_cdf_draw(const std::vector<double>& t_grid, const std::vector<double>& cdf,
                        double u) {
    // first index with cdf >= u, linear interpolation within the step
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.begin()) return t_grid.front();
    if (it == cdf.end()) return t_grid.back();
    const std::size_t hi = static_cast<std::size_t>(it - cdf.begin());
    const std::size_t lo = hi - 1;
    const double span = cdf[hi] - cdf[lo];
    const double frac = span > 0.0 ? (u - cdf[lo]) / span : 1.0;
    return t_grid[lo] + (t_grid[hi] - t_grid[lo]) * frac;
}

ImputationReport multiple_impute(const SurveyFrame& frame, const ImputeConfig& config,
                                 std::size_t n_replicates, double alpha,
                                 std::uint64_t seed) {
    const std::size_t n = frame.size();
    if (n == 0) throw data_error("multiple_impute: empty frame");
    if (n_replicates == 0) throw std::domain_error("multiple_impute: need T >= 1");

    std::vector<double> y(n, 0.0), weight(n);
    std::vector<int> r(n);
    std::vector<std::vector<double>> z(n);
    std::vector<double> y_obs;
    std::vector<std::size_t> missing_idx;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& rec = frame.records[i];
        r[i] = rec.r;
        weight[i] = rec.weight;
        z[i] = rec.z;
        if (rec.r) {
            if (!rec.y) throw data_error("multiple_impute: respondent without outcome");
            y[i] = *rec.y;
            y_obs.push_back(*rec.y);
        } else {
            missing_idx.push_back(i);
        }
    }
    if (y_obs.empty()) throw data_error("multiple_impute: no respondents");

    ImputationReport report;
    report.seed = seed;
    report.alpha = alpha;
    report.n_missing = missing_idx.size();
    {
        std::vector<double> yr, wr;
        for (std::size_t i = 0; i < n; ++i)
            if (r[i]) {
                yr.push_back(y[i]);
                wr.push_back(weight[i]);
            }
        report.naive_estimate = weighted_gini(yr, wr);
    }

    // F(.|R=0) depends only on the data; build it once and reuse per replicate
    CdfEstimate cdf;
    const bool have_missing = !missing_idx.empty();
    if (have_missing) {
        const auto t_grid = default_t_grid(y_obs, config.t_grid_size);
        cdf = nonrespondent_cdf(y, r, z, t_grid,
                                config.method == ImputeMethod::scalar_threshold
                                    ? CdfMethod::scalar_threshold
                                    : CdfMethod::boundary,
                                config.cdf);
    } else {
        report.degenerate_no_missing = true;
    }

    Rng root(seed);
    std::vector<double> yt = y;
    for (std::size_t t = 0; t < n_replicates; ++t) {
        Rng rep = root.derive(t + 1);
        for (std::size_t mi : missing_idx) {
            const double u = rep.uniform_open();
            double draw = inverse_cdf_draw(cdf.t_grid, cdf.values, u);
            if (draw < 0.0) draw = 0.0; // Gini domain
            yt[mi] = draw;
        }
        const double g_hat = weighted_gini(yt, weight);
        double var_hat = 0.0;
        if (config.variance == VarianceMethod::bootstrap)
            var_hat = bootstrap_variance(yt, weight, config.n_boot,
                                         rep.derive(0x9d5ULL).seed());
        else
            var_hat = jackknife_variance(yt, weight);
        const double eps = rep.derive(0x715ULL).normal();
        report.replicates.push_back(g_hat + std::sqrt(std::max(0.0, var_hat)) * eps);
        if (t == 0) report.point = g_hat;
    }
    const auto ci = confidence_interval(report.replicates, alpha);
    report.lower = ci.first;
    report.upper = ci.second;
    return report;
}

} // namespace hemisel
