#pragma once

#include "mcarma/config.hpp"
#include "mcarma/moments.hpp"
#include "mcarma/parallel.hpp"
#include "mcarma/positivity.hpp"
#include "mcarma/simulate.hpp"
#include "mcarma/stats.hpp"
#include "mcarma/stochvol.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

namespace mcarma {

inline std::vector<double> uniform_grid(double horizon, double dt) {
    if (!(horizon > 0 && dt > 0)) throw std::invalid_argument("uniform_grid: horizon and dt must be positive");
    const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
    if (steps < 1) throw std::invalid_argument("uniform_grid: horizon shorter than one step");
    std::vector<double> g(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) g[k] = static_cast<double>(k) * dt;
    return g;
}

// ---------------------------------------------------------------- check

struct CheckEntry {
    std::string name;
    PositivityVerdict verdict;
    nlohmann::json grids;
    double elapsed = 0.0;
};

struct CheckReport {
    std::string model_kind;
    Classification classification;
    std::vector<CheckEntry> checks;
    PositivityVerdict verdict;
};

inline nlohmann::json to_json(const CheckReport& r) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["model_kind"] = r.model_kind;
    j["classification"] = {{"kind", to_string(r.classification.kind)}, {"tau", r.classification.tau}};
    j["checks"] = nlohmann::json::array();
    for (const auto& c : r.checks) {
        nlohmann::json e;
        e["check_name"] = c.name;
        e["verdict"] = to_json(c.verdict);
        e["grids"] = c.grids;
        e["witnesses"] = nlohmann::json::array();
        if (c.verdict.witness) e["witnesses"].push_back(to_json(c.verdict)["witness"]);
        e["elapsed"] = c.elapsed;
        j["checks"].push_back(e);
    }
    j["verdict"] = to_string(r.verdict.status);
    return j;
}

namespace detail {

template <class F>
CheckEntry timed_check(std::string name, nlohmann::json grids, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckEntry e{std::move(name), f(), std::move(grids), 0.0};
    e.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return e;
}

inline nlohmann::json grid_summary(const std::vector<double>& g) {
    return {{"points", g.size()}, {"min", g.empty() ? 0.0 : g.front()}, {"max", g.empty() ? 0.0 : g.back()}};
}

}  // namespace detail

/// Certification battery chosen by model kind and classification.
inline CheckReport run_checks(const ModelConfig& cfg, const CertificationOptions& opt) {
    if (!cfg.cone) throw ConfigError("check: config has no [cone]");
    const ConeSpec& cone = *cfg.cone;
    const MCARMAModel model = cfg.model();
    CheckReport r;
    r.model_kind = to_string(cfg.kind);
    r.classification = model.classification();

    std::string why;
    const bool increasing = is_cone_increasing(cfg.levy, cone, &why);
    r.checks.push_back(detail::timed_check("levy_cone_increasing", nlohmann::json::object(), [&] {
        return increasing ? PositivityVerdict::certified("jumps and drift lie in the cone")
                          : PositivityVerdict::indeterminate("noise is not cone-increasing: " + why);
    }));

    if (cfg.kind != ModelKind::MCARMA) {
        const LinOpNM minusA = cfg.ou_operator().scaled(-1.0);
        r.checks.push_back(detail::timed_check("quasi_positive_generator", nlohmann::json::object(), [&] {
            return is_quasi_positive(minusA, cone, {opt.ray_samples, opt.key.child(1)});
        }));
        r.checks.push_back(detail::timed_check("generator_stable", nlohmann::json::object(), [&] {
            const double tau = spectral_bound(minusA.rep());
            if (tau < 0.0) return PositivityVerdict::certified("tau(-A) < 0");
            Witness w;
            w.element = minusA.rep();
            w.image = minusA.rep();
            w.margin = -tau;
            w.note = "tau(-A) = " + std::to_string(tau);
            return PositivityVerdict::refute(w, "-A is not stable");
        }));
    } else if (model.causal()) {
        const auto s_grid = default_kernel_grid(model);
        r.checks.push_back(detail::timed_check("causal_kernel", detail::grid_summary(s_grid),
                                               [&] { return certify_causal_kernel(model, s_grid, opt); }));
        const auto l_grid = logspace(0.01, 100.0, 30);
        r.checks.push_back(detail::timed_check("complete_monotonicity", detail::grid_summary(l_grid),
                                               [&] { return check_complete_monotonicity(model, l_grid, 4, opt); }));
        if (cfg.factors && !cfg.factors->hadamard_C.empty()) {
            const auto h_grid = linspace(0.25, 50.0, 200);
            r.checks.push_back(detail::timed_check("hadamard_sufficient", detail::grid_summary(h_grid), [&] {
                return check_hadamard_sufficient(cfg.factors->hadamard_C, cfg.factors->hadamard_A, h_grid);
            }));
        }
    } else {
        r.checks.push_back(detail::timed_check("internal_positivity", nlohmann::json::object(),
                                               [&] { return certify_internal_positivity(model, opt); }));
    }

    r.verdict = PositivityVerdict::certified();
    for (const auto& c : r.checks) {
        if (c.verdict.refuted()) {
            r.verdict = c.verdict;
            break;
        }
        r.verdict = combine(r.verdict, c.verdict);
    }
    return r;
}

// ---------------------------------------------------------------- simulate

/// Paths for the configured model on `grid`; stationary start uses the scheme matching the classification.
inline PathBundle simulate_config(const ModelConfig& cfg, const std::vector<double>& grid, StreamKey key, std::size_t n_paths,
                                  unsigned threads) {
    const MCARMAModel model = cfg.model();
    if (cfg.sim.start == "zero") {
        std::vector<Mat> Z0(static_cast<std::size_t>(model.p()), Mat::Zero(model.n(), model.m()));
        return simulate_state(model, grid, Z0, key, n_paths, threads);
    }
    if (cfg.kind == ModelKind::WellBalancedOU)
        return simulate_wellbalanced_ou(cfg.ou_operator(), cfg.levy, grid, key, n_paths, cfg.sim.tol, cfg.cone, threads);
    switch (model.classification().kind) {
        case StabilityKind::Causal: return simulate_stationary_causal(model, grid, key, n_paths, cfg.sim.tol, threads);
        case StabilityKind::NonCausalStationary: return simulate_stationary_split(model, grid, key, n_paths, cfg.sim.tol, threads);
        default: throw std::invalid_argument("simulate: no stationary solution (spectrum on the imaginary axis); use start = \"zero\"");
    }
}

inline std::string fmt_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// t, path_id, x_1_1, x_2_1, ... (column-major vec order).
inline std::string paths_csv(const PathBundle& b) {
    std::string out = "t,path_id";
    for (Eigen::Index j = 0; j < b.m; ++j)
        for (Eigen::Index i = 0; i < b.n; ++i) out += ",x_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
    out += "\n";
    for (std::size_t p = 0; p < b.paths(); ++p)
        for (std::size_t k = 0; k < b.steps(); ++k) {
            out += fmt_double(b.grid[k]) + "," + std::to_string(p);
            const auto col = b.X[p].col(static_cast<Eigen::Index>(k));
            for (Eigen::Index r = 0; r < col.size(); ++r) out += "," + fmt_double(col(r));
            out += "\n";
        }
    return out;
}

inline nlohmann::json paths_meta(const PathBundle& b) {
    nlohmann::json j = to_json(b.meta);
    j["schema_version"] = 1;
    j["n"] = b.n;
    j["m"] = b.m;
    j["p"] = b.p;
    j["paths"] = b.paths();
    j["steps"] = b.steps();
    return j;
}

// ---------------------------------------------------------------- moments

inline MomentReport moment_report(const ModelConfig& cfg, const std::vector<double>& lags) {
    MomentReport r;
    const LinOpNM Q = covariance_operator(cfg.levy);
    const Mat mu = mean_mu(cfg.levy);
    std::function<Mat(double)> acov;
    if (cfg.kind == ModelKind::OU) {
        r.mean = ou_mean(cfg.ou_operator(), mu);
        acov = [&](double h) { return ou_acov(cfg.ou_operator(), Q, h); };
    } else if (cfg.kind == ModelKind::WellBalancedOU) {
        r.mean = wb_mean(cfg.ou_operator(), mu);
        acov = [&](double h) { return wb_acov(cfg.ou_operator(), Q, h); };
    } else {
        const MCARMAModel model = cfg.model();
        r.mean = stationary_mean(model);
        if (model.causal())
            acov = [model](double h) { return autocovariance(model, h); };
        else if (model.classification().kind == StabilityKind::NonCausalStationary)
            acov = [model](double h) { return autocovariance_split(model, h); };
        else
            throw std::invalid_argument("moments: no stationary solution (spectrum on the imaginary axis)");
    }
    r.var0 = acov(0.0);
    for (double h : lags) r.acov.emplace_back(h, acov(h));
    return r;
}

// ---------------------------------------------------------------- validate

struct ValidationReport {
    std::vector<Comparison> metrics;
    std::optional<PathValidation> paths;
    std::string scheme;
    bool pass = true;
};

inline nlohmann::json to_json(const ValidationReport& r) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["scheme"] = r.scheme;
    j["metrics"] = nlohmann::json::array();
    for (const auto& m : r.metrics) j["metrics"].push_back(to_json(m));
    if (r.paths) j["path_validation"] = to_json(*r.paths);
    j["pass"] = r.pass;
    return j;
}

inline long lag_steps(double h, double dt) {
    const long k = std::lround(h / dt);
    if (std::abs(static_cast<double>(k) * dt - h) > 1e-9 * std::max(1.0, h))
        throw std::invalid_argument("validate: lag " + fmt_double(h) + " is not a multiple of dt");
    return k;
}

/// Monte Carlo mean/autocovariance vs closed forms plus path cone margins.
inline ValidationReport validate_config(const ModelConfig& cfg, std::size_t n_paths, double horizon, StreamKey key,
                                        unsigned threads) {
    const auto grid = uniform_grid(horizon, cfg.sim.dt);
    const PathBundle paths = simulate_config(cfg, grid, key, n_paths, threads);
    ValidationReport r;
    r.scheme = paths.meta.scheme;
    if (cfg.sim.start != "zero") {
        const MomentReport th = moment_report(cfg, cfg.output.lags);
        const std::vector<Mat> batches = paths.X.size() >= 2 ? paths.X : split_batches(paths.X, 20);
        r.metrics.push_back(compare("mean", vec(th.mean), estimate_mean(batches)));
        for (const auto& [h, M] : th.acov)
            r.metrics.push_back(compare("acov_lag_" + fmt_double(h), M, estimate_acov(batches, lag_steps(h, cfg.sim.dt))));
    }
    if (cfg.cone) r.paths = validate_paths(paths, *cfg.cone);
    for (const auto& m : r.metrics) r.pass = r.pass && m.max_abs_z < 4.0;
    if (r.paths) r.pass = r.pass && r.paths->pass;
    return r;
}

// ---------------------------------------------------------------- stochvol

/// n, path_id, vec(Y_n), vec(Y_n Y_n^T)
inline std::string returns_csv(const std::vector<Mat>& returns) {
    if (returns.empty()) return "n,path_id\n";
    const Eigen::Index d = returns.front().rows();
    std::string out = "n,path_id";
    for (Eigen::Index i = 0; i < d; ++i) out += ",y_" + std::to_string(i + 1);
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < d; ++i) out += ",yy_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
    out += "\n";
    for (std::size_t p = 0; p < returns.size(); ++p)
        for (Eigen::Index k = 0; k < returns[p].cols(); ++k) {
            const Vec y = returns[p].col(k);
            out += std::to_string(k + 1) + "," + std::to_string(p);
            for (Eigen::Index i = 0; i < d; ++i) out += "," + fmt_double(y(i));
            const Vec yy = vec(y * y.transpose());
            for (Eigen::Index i = 0; i < yy.size(); ++i) out += "," + fmt_double(yy(i));
            out += "\n";
        }
    return out;
}

}  // namespace mcarma
