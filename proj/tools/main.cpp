#include "hemisel/errors.hpp"
#include "hemisel/estimators.hpp"
#include "hemisel/rng.hpp"
#include "hemisel/selection_models.hpp"
#include "hemisel/survey.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace hemisel;

namespace {

// ---------------------------------------------------------------------------
// config parsing

[[noreturn]] void config_fail(const std::string& path, const std::string& what) {
    throw config_error(path + ": " + what);
}

double jnum(const json& j, const std::string& ctx, const char* key, double fallback,
            bool required = false) {
    if (!j.contains(key)) {
        if (required) config_fail(ctx, std::string("missing field '") + key + "'");
        return fallback;
    }
    if (!j[key].is_number()) config_fail(ctx + "." + key, "expected a number");
    return j[key].get<double>();
}

std::vector<double> jvec(const json& j, const std::string& ctx, const char* key) {
    if (!j.contains(key)) return {};
    if (!j[key].is_array()) config_fail(ctx + "." + key, "expected an array");
    std::vector<double> out;
    for (const auto& v : j[key]) out.push_back(v.get<double>());
    return out;
}

DistSpec parse_dist(const json& j, const std::string& ctx) {
    if (!j.is_object() || !j.contains("type")) config_fail(ctx, "law needs a 'type'");
    const std::string type = j["type"].get<std::string>();
    if (type == "normal") return dist_normal(jnum(j, ctx, "mean", 0.0), jnum(j, ctx, "sd", 1.0));
    if (type == "uniform")
        return dist_uniform(jnum(j, ctx, "lo", 0.0, true), jnum(j, ctx, "hi", 1.0, true));
    if (type == "cauchy") return dist_cauchy(jnum(j, ctx, "loc", 0.0), jnum(j, ctx, "scale", 1.0));
    if (type == "student_t")
        return dist_student_t(static_cast<int>(jnum(j, ctx, "dof", 3)), jnum(j, ctx, "loc", 0.0),
                              jnum(j, ctx, "scale", 1.0));
    if (type == "point") return dist_point(jnum(j, ctx, "value", 0.0, true));
    if (type == "uniform_normal_mix")
        return dist_uniform_normal_mix(jnum(j, ctx, "lo", -1.0, true),
                                       jnum(j, ctx, "hi", 1.0, true), jnum(j, ctx, "mean", 0.0),
                                       jnum(j, ctx, "sd", 1.0),
                                       jnum(j, ctx, "uniform_weight", 0.5, true));
    config_fail(ctx + ".type", "unknown law '" + type + "'");
}

std::vector<DistSpec> parse_dists(const json& j, const std::string& ctx, const char* key) {
    std::vector<DistSpec> out;
    if (!j.contains(key)) return out;
    if (!j[key].is_array()) config_fail(ctx + "." + key, "expected an array of laws");
    std::size_t i = 0;
    for (const auto& jj : j[key])
        out.push_back(parse_dist(jj, ctx + "." + key + "[" + std::to_string(i++) + "]"));
    return out;
}

std::vector<std::vector<double>> parse_matrix(const json& j, const std::string& ctx,
                                              const char* key) {
    if (!j.contains(key) || !j[key].is_array())
        config_fail(ctx, std::string("missing matrix '") + key + "'");
    std::vector<std::vector<double>> out;
    for (const auto& row : j[key]) {
        std::vector<double> r;
        for (const auto& v : row) r.push_back(v.get<double>());
        out.push_back(std::move(r));
    }
    return out;
}

struct ModelSpec {
    std::string type;
    HeckmanParams heckman;
    ThresholdModelSpec threshold;
    RandomCoefficientSpec rc;
    ReparamSpec reparam;
};

ModelSpec parse_model(const json& j, const std::string& ctx) {
    ModelSpec m;
    if (!j.is_object() || !j.contains("type")) config_fail(ctx, "model needs a 'type'");
    m.type = j["type"].get<std::string>();
    if (m.type == "heckman") {
        m.heckman.beta = jvec(j, ctx, "beta");
        m.heckman.sigma = jnum(j, ctx, "sigma", 1.0);
        m.heckman.gamma = jvec(j, ctx, "gamma");
        m.heckman.rho = jnum(j, ctx, "rho", 0.0);
        m.heckman.x_laws = parse_dists(j, ctx, "x_laws");
        m.heckman.z_laws = parse_dists(j, ctx, "z_laws");
    } else if (m.type == "threshold") {
        m.threshold.propensity_coef = jvec(j, ctx, "propensity_coef");
        m.threshold.copula_rho = jnum(j, ctx, "copula_rho", 0.0);
        m.threshold.y_intercept = jnum(j, ctx, "y_intercept", 0.0);
        m.threshold.y_coef = jvec(j, ctx, "y_coef");
        m.threshold.y_scale = jnum(j, ctx, "y_scale", 1.0);
        m.threshold.y_exp = j.value("y_exp", false);
        m.threshold.x_laws = parse_dists(j, ctx, "x_laws");
        m.threshold.z_laws = parse_dists(j, ctx, "z_laws");
    } else if (m.type == "random_coefficients") {
        if (!j.contains("groups") || !j["groups"].is_array() || j["groups"].empty())
            config_fail(ctx, "random_coefficients model needs nonempty 'groups'");
        std::size_t gi = 0;
        for (const auto& jg : j["groups"]) {
            const std::string gctx = ctx + ".groups[" + std::to_string(gi++) + "]";
            RcGroup grp;
            grp.weight = jnum(jg, gctx, "weight", 1.0);
            grp.mean = jvec(jg, gctx, "mean");
            grp.chol = cholesky(parse_matrix(jg, gctx, "cov"));
            grp.y_base = jnum(jg, gctx, "y_base", 0.0);
            m.rc.groups.push_back(std::move(grp));
        }
        m.rc.z_laws = parse_dists(j, ctx, "z_laws");
    } else if (m.type == "reparam") {
        m.reparam.mean = jvec(j, ctx, "mean");
        m.reparam.chol = cholesky(parse_matrix(j, ctx, "cov"));
        m.reparam.y_base = jnum(j, ctx, "y_base", 0.0);
        if (!j.contains("v_law")) config_fail(ctx, "reparam model needs 'v_law'");
        m.reparam.v_law = parse_dist(j["v_law"], ctx + ".v_law");
        m.reparam.zbar_laws = parse_dists(j, ctx, "zbar_laws");
    } else {
        config_fail(ctx + ".type", "unknown model '" + m.type + "'");
    }
    return m;
}

SimulatedDataset run_model(const ModelSpec& m, std::size_t n, std::uint64_t seed) {
    if (m.type == "heckman") return simulate_heckman(m.heckman, n, seed);
    if (m.type == "threshold") return simulate_threshold(m.threshold, n, seed);
    if (m.type == "random_coefficients") return simulate_random_coefficients(m.rc, n, seed);
    return simulate_reparam(m.reparam, n, seed);
}

Phi parse_phi(const json& j, const std::string& ctx) {
    if (!j.contains("phi")) return [](double v) { return v; };
    const json& jp = j["phi"];
    if (jp.is_string()) {
        const std::string s = jp.get<std::string>();
        if (s == "identity") return [](double v) { return v; };
        if (s == "one") return [](double) { return 1.0; };
        config_fail(ctx + ".phi", "unknown phi '" + s + "'");
    }
    if (jp.is_object() && jp.contains("type")) {
        const std::string s = jp["type"].get<std::string>();
        if (s == "indicator_leq") {
            const double t = jnum(jp, ctx + ".phi", "t", 0.0, true);
            return [t](double v) { return v <= t ? 1.0 : 0.0; };
        }
        config_fail(ctx + ".phi.type", "unknown phi '" + s + "'");
    }
    config_fail(ctx + ".phi", "expected a string or an object");
}

// ---------------------------------------------------------------------------
// output helpers

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw data_error("cannot write " + path.string());
    os << text;
}

void write_json_file(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_sidecar(const fs::path& out_dir, const std::string& stem, const json& resolved) {
    write_json_file(out_dir / (stem + ".sidecar.json"), resolved);
}

SurveyFrame frame_from_dataset(const SimulatedDataset& ds) {
    SurveyFrame frame;
    frame.z_dim = ds.z.empty() ? 0 : ds.z[0].size();
    frame.x_dim = ds.x.empty() || ds.x[0].empty() ? 0 : ds.x[0].size();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        SurveyRecord rec;
        rec.id = static_cast<long long>(i);
        rec.r = ds.r[i];
        if (ds.r[i]) rec.y = ds.y[i];
        rec.weight = 1.0;
        rec.z = ds.z[i];
        if (frame.x_dim > 0) rec.x = ds.x[i];
        frame.records.push_back(std::move(rec));
    }
    return frame;
}

void write_frame_csv(const fs::path& path, const SurveyFrame& frame,
                     const SimulatedDataset* latents) {
    std::ostringstream os;
    if (!latents) {
        write_survey_csv(os, frame);
    } else {
        os << "id,y,r,weight";
        for (std::size_t j = 0; j < frame.z_dim; ++j) os << ",z_" << (j + 1);
        for (std::size_t j = 0; j < frame.x_dim; ++j) os << ",x_" << (j + 1);
        for (const auto& name : latents->latent_names) os << ",lat_" << name;
        os << "\n";
        for (std::size_t i = 0; i < frame.size(); ++i) {
            const auto& rec = frame.records[i];
            os << rec.id << ",";
            if (rec.y) os << format_double(*rec.y);
            os << "," << rec.r << "," << format_double(rec.weight);
            for (std::size_t j = 0; j < frame.z_dim; ++j) os << "," << format_double(rec.z[j]);
            for (std::size_t j = 0; j < frame.x_dim; ++j) os << "," << format_double(rec.x[j]);
            for (double l : latents->latents[i]) os << "," << format_double(l);
            os << "\n";
        }
    }
    write_text(path, os.str());
}

json echo_base(const std::string& command, const json& config) {
    json echo;
    echo["command"] = command;
    for (auto it = config.begin(); it != config.end(); ++it)
        if (it.key() != "command") echo[it.key()] = it.value();
    return echo;
}

// dataset arrays from a survey frame
struct Arrays {
    std::vector<double> y;
    std::vector<int> r;
    std::vector<std::vector<double>> z;
    std::vector<std::vector<double>> s; // normalized (1, z)/|.|
};

Arrays arrays_from_frame(const SurveyFrame& frame) {
    Arrays a;
    for (const auto& rec : frame.records) {
        a.y.push_back(rec.y.value_or(0.0));
        a.r.push_back(rec.r);
        a.z.push_back(rec.z);
        double nrm = 1.0;
        for (double zj : rec.z) nrm += zj * zj;
        nrm = std::sqrt(nrm);
        std::vector<double> s{1.0 / nrm};
        for (double zj : rec.z) s.push_back(zj / nrm);
        a.s.push_back(std::move(s));
    }
    return a;
}

SurveyFrame load_frame(const fs::path& out_dir, const std::string& data_path) {
    std::ifstream is(out_dir / data_path);
    if (!is) {
        is.open(data_path);
        if (!is) throw data_error("cannot open data file " + data_path);
    }
    return read_survey_csv(is);
}

// ---------------------------------------------------------------------------
// commands

int cmd_simulate(const json& config, const fs::path& out_dir) {
    const ModelSpec model = parse_model(config.at("model"), "model");
    const std::size_t n = static_cast<std::size_t>(jnum(config, "config", "n", 0, true));
    const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
    const bool keep_latents = config.value("keep_latents", false);
    const std::string out_csv = config.value("out_csv", "simulated.csv");

    const auto ds = run_model(model, n, seed);
    const auto frame = frame_from_dataset(ds);
    write_frame_csv(out_dir / out_csv, frame, keep_latents ? &ds : nullptr);

    json echo = echo_base("simulate", config);
    echo["seed"] = seed;
    echo["out_csv"] = out_csv;
    write_sidecar(out_dir, fs::path(out_csv).stem().string(), echo);
    std::cout << "wrote " << (out_dir / out_csv).string() << " (" << n << " rows)\n";
    return 0;
}

int cmd_estimate(const json& config, const fs::path& out_dir) {
    const SurveyFrame frame = load_frame(out_dir, config.at("data").get<std::string>());
    const Arrays a = arrays_from_frame(frame);
    const std::string estimator = config.at("estimator").get<std::string>();
    const std::string prefix = config.value("out_prefix", "estimate");
    const Phi phi = parse_phi(config, "config");

    json summary;
    summary["estimator"] = estimator;
    std::string grid_csv;

    if (estimator == "mean_by_integral") {
        MeanIntegralConfig cfg;
        cfg.lp.bandwidth = jnum(config, "config", "bandwidth", 0.0);
        cfg.propensity_bandwidth = jnum(config, "config", "propensity_bandwidth", 0.0);
        cfg.endpoint_route = config.value("endpoint_route", false);
        const auto res = mean_by_integral(a.y, a.r, a.z, phi, cfg);
        summary["estimate"] = res.estimate;
        summary["at_infinity_unreliable"] = res.at_infinity_unreliable;
        summary["propensity_range"] = {res.p_min, res.p_max};
    } else if (estimator == "mean_at_boundary") {
        BoundaryMeanConfig cfg;
        cfg.bandwidth = jnum(config, "config", "bandwidth", 0.0);
        Vec3 s_tilde{0.0, 1.0, 0.0};
        const auto st = jvec(config, "config", "s_tilde");
        for (std::size_t j = 0; j < st.size() && j < 3; ++j) s_tilde[j] = st[j];
        const auto res = mean_at_boundary(a.y, a.r, a.s, phi, s_tilde, cfg);
        summary["estimate"] = res.estimate;
        summary["limit_pos"] = res.limit_pos;
        summary["limit_neg"] = res.limit_neg;
        summary["n_pos"] = res.n_pos;
        summary["n_neg"] = res.n_neg;
    } else if (estimator == "series") {
        const int T = static_cast<int>(jnum(config, "config", "T", 7));
        const int resolution = static_cast<int>(jnum(config, "config", "grid_resolution", 256));
        const int d = static_cast<int>(a.s.empty() ? 2 : a.s[0].size());
        const auto gamma_grid = build_grid(d, resolution);
        SeriesConfig cfg;
        cfg.density_bandwidth = jnum(config, "config", "density_bandwidth", 0.0);
        double mean_estimate;
        if (config.contains("mean_estimate")) {
            mean_estimate = config["mean_estimate"].get<double>();
        } else {
            BoundaryMeanConfig bcfg;
            mean_estimate =
                mean_at_boundary(a.y, a.r, a.s, phi, Vec3{0.0, 1.0, 0.0}, bcfg).estimate;
        }
        const auto est =
            series_coefficients(a.y, a.r, a.s, phi, gamma_grid, T, mean_estimate, cfg);
        summary["mean_estimate"] = mean_estimate;
        summary["root_integral"] = est.root.integral();
        summary["dropped"] = est.dropped;
        summary["drop_warning"] = est.drop_warning;
        std::ostringstream os;
        os << (d == 2 ? "s_1,s_2" : "s_1,s_2,s_3") << ",weight,root_odd,root\n";
        for (std::size_t i = 0; i < gamma_grid->size(); ++i) {
            os << format_double(gamma_grid->nodes[i][0]) << ","
               << format_double(gamma_grid->nodes[i][1]);
            if (d == 3) os << "," << format_double(gamma_grid->nodes[i][2]);
            os << "," << format_double(gamma_grid->weights[i]) << ","
               << format_double(est.root_odd.values[i]) << ","
               << format_double(est.root.values[i]) << "\n";
        }
        grid_csv = os.str();
    } else if (estimator == "nonrespondent_cdf") {
        CdfConfig cfg;
        const std::string method = config.value("method", "scalar_threshold");
        std::vector<double> y_obs;
        for (std::size_t i = 0; i < a.y.size(); ++i)
            if (a.r[i]) y_obs.push_back(a.y[i]);
        const auto t_grid = default_t_grid(
            y_obs, static_cast<std::size_t>(jnum(config, "config", "t_grid_size", 512)));
        const auto est = nonrespondent_cdf(
            a.y, a.r, method == "boundary" ? a.s : a.z, t_grid,
            method == "boundary" ? CdfMethod::boundary : CdfMethod::scalar_threshold, cfg);
        summary["p_r0"] = est.p_r0;
        summary["method"] = method;
        std::ostringstream os;
        os << "t,cdf\n";
        for (std::size_t g = 0; g < est.t_grid.size(); ++g)
            os << format_double(est.t_grid[g]) << "," << format_double(est.values[g]) << "\n";
        grid_csv = os.str();
    } else if (estimator == "fourier") {
        if (frame.z_dim != 2)
            throw data_error("fourier estimator needs exactly two instrument columns (v, zbar)");
        std::vector<double> v, zb;
        for (const auto& zi : a.z) {
            v.push_back(zi[0]);
            zb.push_back(zi[1]);
        }
        FourierConfig cfg;
        cfg.lp.bandwidth_x = jnum(config, "config", "h_v", 0.0);
        cfg.lp.bandwidth_z = jnum(config, "config", "h_z", 0.0);
        cfg.s_max = jnum(config, "config", "s_max", cfg.s_max);
        cfg.n_s =
            static_cast<std::size_t>(jnum(config, "config", "n_s", static_cast<double>(cfg.n_s)));
        cfg.cutoff = jnum(config, "config", "cutoff", cfg.cutoff);
        cfg.rolloff = jnum(config, "config", "rolloff", cfg.rolloff);
        cfg.zbar_absmax = jnum(config, "config", "zbar_absmax", 0.0);
        cfg.theta_lo = jnum(config, "config", "theta_lo", cfg.theta_lo);
        cfg.theta_hi = jnum(config, "config", "theta_hi", cfg.theta_hi);
        cfg.gbar_lo = jnum(config, "config", "gbar_lo", cfg.gbar_lo);
        cfg.gbar_hi = jnum(config, "config", "gbar_hi", cfg.gbar_hi);
        const auto est = fourier_root(a.y, a.r, v, zb, phi, cfg);
        summary["cutoff"] = est.cutoff;
        summary["imag_residual"] = est.imag_residual;
        summary["s0_slice_by_zbar"] = est.s0_slice_by_zbar;
        std::ostringstream os;
        os << "theta,gbar,value\n";
        for (std::size_t i = 0; i < est.theta_grid.size(); ++i)
            for (std::size_t j = 0; j < est.gbar_grid.size(); ++j)
                os << format_double(est.theta_grid[i]) << "," << format_double(est.gbar_grid[j])
                   << "," << format_double(est.values[i * est.gbar_grid.size() + j]) << "\n";
        grid_csv = os.str();
    } else {
        config_fail("estimator", "unknown estimator '" + estimator + "'");
    }

    json echo = echo_base("estimate", config);
    summary["config"] = echo;
    write_json_file(out_dir / (prefix + ".json"), summary);
    if (!grid_csv.empty()) write_text(out_dir / (prefix + ".csv"), grid_csv);
    write_sidecar(out_dir, prefix, echo);
    std::cout << "wrote " << (out_dir / (prefix + ".json")).string() << "\n";
    return 0;
}

ImputeConfig parse_impute_config(const json& config) {
    ImputeConfig cfg;
    const std::string method = config.value("method", "scalar_threshold");
    cfg.method = method == "boundary" ? ImputeMethod::boundary : ImputeMethod::scalar_threshold;
    cfg.t_grid_size = static_cast<std::size_t>(jnum(config, "config", "t_grid_size", 512));
    cfg.n_boot = static_cast<std::size_t>(jnum(config, "config", "n_boot", 200));
    cfg.variance = config.value("variance", std::string("bootstrap")) == "jackknife"
                       ? VarianceMethod::jackknife
                       : VarianceMethod::bootstrap;
    return cfg;
}

json report_to_json(const ImputationReport& report, bool include_replicates) {
    json j;
    j["point"] = report.point;
    j["naive_estimate"] = report.naive_estimate;
    j["lower"] = report.lower;
    j["upper"] = report.upper;
    j["alpha"] = report.alpha;
    j["replicate_count"] = report.replicates.size();
    j["n_missing"] = report.n_missing;
    j["degenerate_no_missing"] = report.degenerate_no_missing;
    j["seed"] = report.seed;
    if (include_replicates) j["replicates"] = report.replicates;
    return j;
}

int cmd_impute(const json& config, const fs::path& out_dir) {
    const SurveyFrame frame = load_frame(out_dir, config.at("data").get<std::string>());
    const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
    const std::size_t T = static_cast<std::size_t>(jnum(config, "config", "replicates", 40));
    const double alpha = jnum(config, "config", "alpha", 0.1);
    const ImputeConfig cfg = parse_impute_config(config);

    const auto report = multiple_impute(frame, cfg, T, alpha, seed);

    const std::string out_json = config.value("out_json", "impute_report.json");
    json j = report_to_json(report, config.value("include_replicates", true));
    j["config"] = echo_base("impute", config);
    j["config"]["seed"] = seed;
    write_json_file(out_dir / out_json, j);
    std::ostringstream os;
    os << "point,lower,upper,alpha,replicates,n_missing\n"
       << format_double(report.point) << "," << format_double(report.lower) << ","
       << format_double(report.upper) << "," << format_double(alpha) << "," << T << ","
       << report.n_missing << "\n";
    write_text(out_dir / (fs::path(out_json).stem().string() + ".csv"), os.str());
    write_sidecar(out_dir, fs::path(out_json).stem().string(), j["config"]);
    std::cout << "interval [" << report.lower << ", " << report.upper << "] from " << T
              << " replicates\n";
    return 0;
}

struct RepResult {
    bool failed = false;
    std::string error;
    double g_true = 0.0;
    double mi_lower = 0.0, mi_upper = 0.0;
    double naive_lower = 0.0, naive_upper = 0.0;
};

int cmd_experiment(const json& config, const fs::path& out_dir, int threads) {
    const std::size_t reps = static_cast<std::size_t>(jnum(config, "config", "reps", 0, true));
    if (reps < 1) config_fail("reps", "need reps >= 1");
    const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
    const json& jpop = config.at("population");
    const ModelSpec model = parse_model(jpop.at("model"), "population.model");
    const std::size_t pop_n = static_cast<std::size_t>(jnum(jpop, "population", "size", 0, true));
    const std::size_t sample_n =
        static_cast<std::size_t>(jnum(config, "config", "sample_size", 0, true));
    if (sample_n > pop_n) config_fail("sample_size", "sample larger than population");
    const json& jimp = config.at("impute");
    const ImputeConfig icfg = parse_impute_config(jimp);
    const std::size_t T = static_cast<std::size_t>(jnum(jimp, "impute", "replicates", 30));
    const double alpha = jnum(jimp, "impute", "alpha", 0.1);

    Rng root(seed);
    auto run_rep = [&](std::size_t rep) {
        RepResult res;
        try {
            Rng rep_rng = root.derive(rep + 1);
            const auto pop = run_model(model, pop_n, rep_rng.derive(1).seed());
            std::vector<double> ones(pop_n, 1.0);
            res.g_true = weighted_gini(pop.y, ones);

            // equal-probability sample without replacement
            Rng pick = rep_rng.derive(2);
            std::vector<std::size_t> idx(pop_n);
            for (std::size_t i = 0; i < pop_n; ++i) idx[i] = i;
            for (std::size_t i = 0; i < sample_n; ++i) {
                const std::size_t j = i + static_cast<std::size_t>(pick.below(pop_n - i));
                std::swap(idx[i], idx[j]);
            }
            SurveyFrame frame;
            frame.z_dim = pop.z.empty() ? 0 : pop.z[0].size();
            const double weight = static_cast<double>(pop_n) / static_cast<double>(sample_n);
            for (std::size_t i = 0; i < sample_n; ++i) {
                const std::size_t k = idx[i];
                SurveyRecord rec;
                rec.id = static_cast<long long>(k);
                rec.r = pop.r[k];
                if (rec.r) rec.y = pop.y[k];
                rec.weight = weight;
                rec.z = pop.z[k];
                frame.records.push_back(std::move(rec));
            }

            const auto report = multiple_impute(frame, icfg, T, alpha, rep_rng.derive(3).seed());
            res.mi_lower = report.lower;
            res.mi_upper = report.upper;

            // naive interval: respondents-only Gini, plain normal approximation
            std::vector<double> yr, wr;
            for (const auto& rec : frame.records)
                if (rec.r) {
                    yr.push_back(*rec.y);
                    wr.push_back(rec.weight);
                }
            const double g_naive = weighted_gini(yr, wr);
            const double var_naive =
                bootstrap_variance(yr, wr, icfg.n_boot, rep_rng.derive(4).seed());
            const double zq = normal_quantile(1.0 - 0.5 * alpha);
            res.naive_lower = g_naive - zq * std::sqrt(var_naive);
            res.naive_upper = g_naive + zq * std::sqrt(var_naive);
        } catch (const std::exception& e) {
            res.failed = true;
            res.error = e.what();
        }
        return res;
    };

    std::vector<RepResult> results(reps);
    if (threads <= 1) {
        for (std::size_t rep = 0; rep < reps; ++rep) results[rep] = run_rep(rep);
    } else {
        std::vector<std::future<void>> futures;
        std::atomic<std::size_t> next{0};
        for (int t = 0; t < threads; ++t) {
            futures.push_back(std::async(std::launch::async, [&]() {
                for (;;) {
                    const std::size_t rep = next.fetch_add(1);
                    if (rep >= reps) return;
                    results[rep] = run_rep(rep);
                }
            }));
        }
        for (auto& f : futures) f.get();
    }

    std::ostringstream os;
    os << "rep,g_true,mi_lower,mi_upper,mi_covered,naive_lower,naive_upper,naive_covered,failed\n";
    std::size_t ok = 0, mi_cov = 0, naive_cov = 0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
        const auto& r = results[rep];
        const bool mc = !r.failed && r.mi_lower <= r.g_true && r.g_true <= r.mi_upper;
        const bool nc = !r.failed && r.naive_lower <= r.g_true && r.g_true <= r.naive_upper;
        if (!r.failed) {
            ++ok;
            mi_cov += mc ? 1 : 0;
            naive_cov += nc ? 1 : 0;
        }
        os << rep << "," << format_double(r.g_true) << "," << format_double(r.mi_lower) << ","
           << format_double(r.mi_upper) << "," << (mc ? 1 : 0) << ","
           << format_double(r.naive_lower) << "," << format_double(r.naive_upper) << ","
           << (nc ? 1 : 0) << "," << (r.failed ? 1 : 0) << "\n";
    }
    const std::string out_csv = config.value("out_csv", "experiment.csv");
    write_text(out_dir / out_csv, os.str());

    json summary;
    summary["reps"] = reps;
    summary["completed"] = ok;
    summary["mi_coverage"] = ok > 0 ? static_cast<double>(mi_cov) / static_cast<double>(ok) : 0.0;
    summary["naive_coverage"] =
        ok > 0 ? static_cast<double>(naive_cov) / static_cast<double>(ok) : 0.0;
    summary["config"] = echo_base("experiment", config);
    summary["config"]["seed"] = seed;
    write_json_file(out_dir / (fs::path(out_csv).stem().string() + ".summary.json"), summary);
    write_sidecar(out_dir, fs::path(out_csv).stem().string(), summary["config"]);
    std::cout << "mi coverage " << summary["mi_coverage"] << ", naive coverage "
              << summary["naive_coverage"] << " over " << ok << " reps\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nonparametric endogenous-selection estimators and survey imputation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed_override;
    int threads = 1;

    for (const auto& name : {"simulate", "estimate", "impute", "experiment"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON configuration file")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed_override, "override the configured seed");
        sub->add_option("--threads", threads, "worker threads (experiment only)");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        std::ifstream is(config_path);
        if (!is) throw config_error("cannot open config file " + config_path);
        json config;
        try {
            config = json::parse(is);
        } catch (const nlohmann::json::exception& e) {
            throw config_error(std::string("config parse error: ") + e.what());
        }
        if (seed_override) config["seed"] = *seed_override;
        if (!config.contains("seed")) config["seed"] = 0; // defaulted and echoed

        fs::create_directories(out_dir);
        const std::string command = app.get_subcommands().front()->get_name();
        if (config.contains("command") && config["command"].get<std::string>() != command)
            throw config_error("config was written for command '" +
                               config["command"].get<std::string>() + "'");

        if (command == "simulate") return cmd_simulate(config, out_dir);
        if (command == "estimate") return cmd_estimate(config, out_dir);
        if (command == "impute") return cmd_impute(config, out_dir);
        return cmd_experiment(config, out_dir, threads);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const capability_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    }
}
