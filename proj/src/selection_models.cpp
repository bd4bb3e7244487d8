#include "hemisel/selection_models.hpp"

#include "hemisel/errors.hpp"

#include <cmath>

namespace hemisel {

double DistSpec::sample(Rng& rng) const {
    switch (kind) {
        case Kind::normal: return rng.normal(a, b);
        case Kind::uniform: return rng.uniform(a, b);
        case Kind::cauchy: return a + b * rng.cauchy();
        case Kind::student_t: {
            double chi2 = 0.0;
            for (int j = 0; j < dof; ++j) {
                const double u = rng.normal();
                chi2 += u * u;
            }
            return a + b * rng.normal() / std::sqrt(chi2 / dof);
        }
        case Kind::point: return a;
        case Kind::uniform_normal_mix:
            return rng.uniform() < w1 ? rng.uniform(a, b) : rng.normal(c, d);
    }
    return 0.0;
}

DistSpec dist_normal(double mean, double sd) { return {DistSpec::Kind::normal, mean, sd, 0}; }
DistSpec dist_uniform(double lo, double hi) { return {DistSpec::Kind::uniform, lo, hi, 0}; }
DistSpec dist_cauchy(double loc, double scale) { return {DistSpec::Kind::cauchy, loc, scale, 0}; }
DistSpec dist_student_t(int dof, double loc, double scale) {
    return {DistSpec::Kind::student_t, loc, scale, dof};
}
DistSpec dist_point(double value) { return {DistSpec::Kind::point, value, 0.0, 0}; }
DistSpec dist_uniform_normal_mix(double lo, double hi, double mean, double sd,
                                 double uniform_weight) {
    DistSpec s;
    s.kind = DistSpec::Kind::uniform_normal_mix;
    s.a = lo;
    s.b = hi;
    s.c = mean;
    s.d = sd;
    s.w1 = uniform_weight;
    return s;
}

namespace {

std::vector<double> draw_all(const std::vector<DistSpec>& laws, Rng& rng) {
    std::vector<double> out;
    out.reserve(laws.size());
    for (const auto& law : laws) out.push_back(law.sample(rng));
    return out;
}

double dot_prod(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

std::vector<double> mvn_draw(const std::vector<double>& mean,
                             const std::vector<std::vector<double>>& chol, Rng& rng) {
    const std::size_t k = mean.size();
    std::vector<double> u(k);
    for (auto& v : u) v = rng.normal();
    std::vector<double> out(k);
    for (std::size_t i = 0; i < k; ++i) {
        double acc = mean[i];
        for (std::size_t j = 0; j <= i && j < chol[i].size(); ++j) acc += chol[i][j] * u[j];
        out[i] = acc;
    }
    return out;
}

} // namespace

std::vector<std::vector<double>> cholesky(const std::vector<std::vector<double>>& cov) {
    const std::size_t n = cov.size();
    std::vector<std::vector<double>> l(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double acc = cov[i][j];
            for (std::size_t k = 0; k < j; ++k) acc -= l[i][k] * l[j][k];
            if (i == j) {
                if (acc <= 0.0) throw numeric_error("cholesky: matrix not positive definite");
                l[i][i] = std::sqrt(acc);
            } else {
                l[i][j] = acc / l[j][j];
            }
        }
    }
    return l;
}

SimulatedDataset simulate_heckman(const HeckmanParams& params, std::size_t n,
                                  std::uint64_t seed) {
    if (n < 1) throw std::domain_error("simulate_heckman: n must be >= 1");
    if (params.sigma <= 0.0) throw std::domain_error("simulate_heckman: sigma must be > 0");
    if (std::abs(params.rho) > 1.0) throw std::domain_error("simulate_heckman: |rho| <= 1");
    if (params.beta.size() != params.x_laws.size() ||
        params.gamma.size() != params.z_laws.size())
        throw config_error("simulate_heckman: coefficient/law size mismatch");

    Rng rng(seed);
    SimulatedDataset out;
    out.seed = seed;
    out.model = "heckman";
    out.latent_names = {"e_y", "e_r"};
    const double rr = std::sqrt(1.0 - params.rho * params.rho);
    for (std::size_t i = 0; i < n; ++i) {
        const auto xi = draw_all(params.x_laws, rng);
        const auto zi = draw_all(params.z_laws, rng);
        const double u1 = rng.normal();
        const double u2 = rng.normal();
        const double ey = u1;
        const double er = params.rho * u1 + rr * u2;
        const double yi = dot_prod(params.beta, xi) + params.sigma * ey;
        const int ri = dot_prod(params.gamma, zi) - er > 0.0 ? 1 : 0;
        out.y.push_back(yi);
        out.r.push_back(ri);
        out.z.push_back(zi);
        out.x.push_back(xi);
        out.latents.push_back({ey, er});
    }
    return out;
}

double ThresholdModelSpec::propensity(const std::vector<double>& z) const {
    double idx = propensity_coef.empty() ? 0.0 : propensity_coef[0];
    for (std::size_t j = 0; j + 1 < propensity_coef.size(); ++j) idx += propensity_coef[j + 1] * z[j];
    return normal_cdf(idx);
}

SimulatedDataset simulate_threshold(const ThresholdModelSpec& spec, std::size_t n,
                                    std::uint64_t seed) {
    Rng rng(seed);
    SimulatedDataset out;
    out.seed = seed;
    out.model = "threshold";
    out.latent_names = {"h", "e"};
    const double rho = spec.copula_rho;
    if (std::abs(rho) > 1.0) throw std::domain_error("simulate_threshold: |copula_rho| <= 1");
    const double rr = std::sqrt(1.0 - rho * rho);
    for (std::size_t i = 0; i < n; ++i) {
        const auto xi = draw_all(spec.x_laws, rng);
        const auto zi = draw_all(spec.z_laws, rng);
        const double u1 = rng.normal();
        const double u2 = rng.normal();
        const double h = normal_cdf(u1);
        // positive copula_rho couples low H (responding) with high outcomes
        const double e = -rho * u1 + rr * u2;
        double yi = spec.y_intercept + dot_prod(spec.y_coef, xi) + spec.y_scale * e;
        if (spec.y_exp) yi = std::exp(yi);
        const int ri = spec.propensity(zi) > h ? 1 : 0;
        out.y.push_back(yi);
        out.r.push_back(ri);
        out.z.push_back(zi);
        out.x.push_back(xi);
        out.latents.push_back({h, e});
    }
    return out;
}

SimulatedDataset simulate_random_coefficients(const RandomCoefficientSpec& spec,
                                              std::size_t n, std::uint64_t seed) {
    if (spec.groups.empty())
        throw config_error("simulate_random_coefficients: no mixture groups");
    double wsum = 0.0;
    for (const auto& g : spec.groups) {
        if (g.weight <= 0.0)
            throw config_error("simulate_random_coefficients: weights must be positive");
        wsum += g.weight;
    }
    const std::size_t dz = spec.z_laws.size();
    Rng rng(seed);
    SimulatedDataset out;
    out.seed = seed;
    out.model = "random_coefficients";
    out.latent_names = {"group", "a"};
    for (std::size_t j = 0; j < dz; ++j) out.latent_names.push_back("b" + std::to_string(j + 1));
    out.latent_names.push_back("e");

    for (std::size_t i = 0; i < n; ++i) {
        const auto zi = draw_all(spec.z_laws, rng);
        // mixture component
        double u = rng.uniform() * wsum;
        std::size_t gidx = 0;
        for (; gidx + 1 < spec.groups.size(); ++gidx) {
            u -= spec.groups[gidx].weight;
            if (u < 0.0) break;
        }
        const RcGroup& grp = spec.groups[gidx];
        std::vector<double> ab;
        double norm2 = 0.0;
        do {
            ab = mvn_draw(grp.mean, grp.chol, rng);
            norm2 = 0.0;
            for (std::size_t j = 0; j + 1 < ab.size(); ++j) norm2 += ab[j] * ab[j];
        } while (norm2 == 0.0); // probability-zero event under a continuous law
        const double e = ab.back();
        double index = ab[0];
        for (std::size_t j = 0; j < dz; ++j) index += ab[j + 1] * zi[j];
        const int ri = index > 0.0 ? 1 : 0;
        const double yi = grp.y_base + e;

        const double nrm = std::sqrt(norm2);
        std::vector<double> gam(dz + 1);
        for (std::size_t j = 0; j <= dz; ++j) gam[j] = ab[j] / nrm;
        double s2 = 1.0;
        for (double zj : zi) s2 += zj * zj;
        const double snrm = std::sqrt(s2);
        std::vector<double> s(dz + 1);
        s[0] = 1.0 / snrm;
        for (std::size_t j = 0; j < dz; ++j) s[j + 1] = zi[j] / snrm;

        out.y.push_back(yi);
        out.r.push_back(ri);
        out.z.push_back(zi);
        std::vector<double> lat;
        lat.push_back(static_cast<double>(gidx));
        for (std::size_t j = 0; j <= dz; ++j) lat.push_back(ab[j]);
        lat.push_back(e);
        out.latents.push_back(std::move(lat));
        out.gamma_norm.push_back(std::move(gam));
        out.s_norm.push_back(std::move(s));
    }
    return out;
}

SimulatedDataset simulate_reparam(const ReparamSpec& spec, std::size_t n,
                                  std::uint64_t seed) {
    const std::size_t dzb = spec.zbar_laws.size();
    if (spec.mean.size() != dzb + 2)
        throw config_error("simulate_reparam: mean must have size |zbar| + 2");
    Rng rng(seed);
    SimulatedDataset out;
    out.seed = seed;
    out.model = "reparam";
    out.latent_names = {"theta"};
    for (std::size_t j = 0; j < dzb; ++j)
        out.latent_names.push_back("gbar" + std::to_string(j + 1));
    out.latent_names.push_back("e");

    for (std::size_t i = 0; i < n; ++i) {
        const double v = spec.v_law.sample(rng);
        const auto zb = draw_all(spec.zbar_laws, rng);
        const auto lat = mvn_draw(spec.mean, spec.chol, rng);
        const double theta = lat[0];
        const double e = lat.back();
        double index = v - theta;
        for (std::size_t j = 0; j < dzb; ++j) index -= lat[j + 1] * zb[j];
        const int ri = index > 0.0 ? 1 : 0;
        out.y.push_back(spec.y_base + e);
        out.r.push_back(ri);
        std::vector<double> zrow;
        zrow.push_back(v);
        for (double zj : zb) zrow.push_back(zj);
        out.z.push_back(std::move(zrow));
        out.latents.push_back(lat);
    }
    return out;
}

namespace {

ResponseTypeShares shares_from_counts(std::size_t always, std::size_t complier,
                                      std::size_t defier, std::size_t n) {
    ResponseTypeShares s;
    const double dn = static_cast<double>(n);
    s.always_taker = static_cast<double>(always) / dn;
    s.complier = static_cast<double>(complier) / dn;
    s.defier = static_cast<double>(defier) / dn;
    s.never_taker = 1.0 - s.always_taker - s.complier - s.defier;
    return s;
}

} // namespace

ResponseTypeShares classify_response_types(const ThresholdModelSpec& spec,
                                           const std::vector<double>& z,
                                           const std::vector<double>& z_prime,
                                           std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    const double p0 = spec.propensity(z);
    const double p1 = spec.propensity(z_prime);
    std::size_t always = 0, complier = 0, defier = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double h = normal_cdf(rng.normal());
        const bool r0 = p0 > h, r1 = p1 > h;
        if (r0 && r1) ++always;
        else if (!r0 && r1) ++complier;
        else if (r0 && !r1) ++defier;
    }
    return shares_from_counts(always, complier, defier, n);
}

ResponseTypeShares classify_response_types(const RandomCoefficientSpec& spec,
                                           const std::vector<double>& z,
                                           const std::vector<double>& z_prime,
                                           std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t dz = spec.z_laws.size();
    if (z.size() != dz || z_prime.size() != dz)
        throw config_error("classify_response_types: instrument size mismatch");
    double wsum = 0.0;
    for (const auto& g : spec.groups) wsum += g.weight;
    std::size_t always = 0, complier = 0, defier = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double u = rng.uniform() * wsum;
        std::size_t gidx = 0;
        for (; gidx + 1 < spec.groups.size(); ++gidx) {
            u -= spec.groups[gidx].weight;
            if (u < 0.0) break;
        }
        std::vector<double> ab;
        double norm2 = 0.0;
        do {
            ab = mvn_draw(spec.groups[gidx].mean, spec.groups[gidx].chol, rng);
            norm2 = 0.0;
            for (std::size_t j = 0; j + 1 < ab.size(); ++j) norm2 += ab[j] * ab[j];
        } while (norm2 == 0.0);
        double i0 = ab[0], i1 = ab[0];
        for (std::size_t j = 0; j < dz; ++j) {
            i0 += ab[j + 1] * z[j];
            i1 += ab[j + 1] * z_prime[j];
        }
        const bool r0 = i0 > 0.0, r1 = i1 > 0.0;
        if (r0 && r1) ++always;
        else if (!r0 && r1) ++complier;
        else if (r0 && !r1) ++defier;
    }
    return shares_from_counts(always, complier, defier, n);
}

} // namespace hemisel
