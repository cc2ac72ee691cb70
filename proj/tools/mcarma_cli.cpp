#include "mcarma/commands.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

void write_out(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<double> parse_lags(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size() || v < 0) throw mcarma::ConfigError("--lags: bad lag '" + tok + "'");
        out.push_back(v);
    }
    if (out.empty()) throw mcarma::ConfigError("--lags: empty list");
    return out;
}

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    std::string out;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("config", c.config, "model config (TOML)")->required();
    sub->add_option("--seed", c.seed, "RNG seed (overrides simulation.seed)");
    sub->add_option("--threads", c.threads, "worker cap (default: simulation.threads, then MCARMA_THREADS)");
}

mcarma::StreamKey key_for(const Common& c, const mcarma::ModelConfig& cfg) { return {c.seed.value_or(cfg.sim.seed), 0}; }

unsigned threads_for(const Common& c, const mcarma::ModelConfig& cfg) {
    return mcarma::resolve_threads(c.threads ? c.threads : cfg.sim.threads);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MCARMA model certification, simulation and moment validation"};
    app.require_subcommand(1);

    Common check_c, sim_c, mom_c, val_c, sv_c;
    std::string report_path;
    std::optional<std::size_t> sim_paths, val_paths, sv_paths, sv_returns;
    std::optional<double> sim_horizon, val_horizon;
    std::string lags_arg, returns_csv_path;

    auto* check = app.add_subcommand("check", "run the positivity certification battery");
    add_common(check, check_c);
    check->add_option("--report", report_path, "write the JSON report here");

    auto* simulate = app.add_subcommand("simulate", "simulate output paths to CSV");
    add_common(simulate, sim_c);
    simulate->add_option("--paths", sim_paths, "number of paths");
    simulate->add_option("--horizon", sim_horizon, "time horizon");
    simulate->add_option("--out", sim_c.out, "CSV output (meta sidecar written next to it)");

    auto* moments = app.add_subcommand("moments", "closed-form mean and autocovariances");
    add_common(moments, mom_c);
    moments->add_option("--lags", lags_arg, "comma-separated lags (default: output.lags)");
    moments->add_option("--out", mom_c.out, "output file (.csv for CSV, otherwise JSON)");

    auto* validate = app.add_subcommand("validate", "Monte Carlo moments vs closed forms and path positivity");
    add_common(validate, val_c);
    validate->add_option("--paths", val_paths, "number of paths");
    validate->add_option("--horizon", val_horizon, "time horizon per path");
    validate->add_option("--out", val_c.out, "JSON report");

    auto* stochvol = app.add_subcommand("stochvol", "squared-return autocovariance: theory vs Monte Carlo");
    add_common(stochvol, sv_c);
    stochvol->add_option("--paths", sv_paths, "number of covariance/price paths");
    stochvol->add_option("--returns", sv_returns, "returns per path");
    stochvol->add_option("--out", sv_c.out, "JSON report");
    stochvol->add_option("--returns-csv", returns_csv_path, "write realized returns as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (check->parsed()) {
            const auto cfg = mcarma::load_config_file(check_c.config);
            mcarma::CertificationOptions opt;
            opt.key = key_for(check_c, cfg);
            opt.threads = threads_for(check_c, cfg);
            const auto rep = mcarma::run_checks(cfg, opt);
            const auto j = mcarma::to_json(rep);
            if (!report_path.empty()) write_out(report_path, j.dump(2) + "\n");
            std::cout << "verdict: " << mcarma::to_string(rep.verdict.status) << "\n";
            if (rep.verdict.refuted()) {
                std::cout << "witness: " << mcarma::to_json(rep.verdict)["witness"].dump() << "\n";
                return kFail;
            }
            return kPass;
        }
        if (simulate->parsed()) {
            const auto cfg = mcarma::load_config_file(sim_c.config);
            const auto grid = mcarma::uniform_grid(sim_horizon.value_or(cfg.sim.horizon), cfg.sim.dt);
            const auto paths = mcarma::simulate_config(cfg, grid, key_for(sim_c, cfg), sim_paths.value_or(cfg.sim.paths),
                                                       threads_for(sim_c, cfg));
            write_out(sim_c.out, mcarma::paths_csv(paths));
            if (!sim_c.out.empty() && sim_c.out != "-") write_out(sim_c.out + ".meta.json", mcarma::paths_meta(paths).dump(2) + "\n");
            return kPass;
        }
        if (moments->parsed()) {
            const auto cfg = mcarma::load_config_file(mom_c.config);
            const auto lags = lags_arg.empty() ? cfg.output.lags : parse_lags(lags_arg);
            const auto rep = mcarma::moment_report(cfg, lags);
            write_out(mom_c.out, ends_with(mom_c.out, ".csv") ? mcarma::to_csv(rep) : mcarma::to_json(rep).dump(2) + "\n");
            return kPass;
        }
        if (validate->parsed()) {
            const auto cfg = mcarma::load_config_file(val_c.config);
            const auto rep = mcarma::validate_config(cfg, val_paths.value_or(cfg.sim.paths), val_horizon.value_or(cfg.sim.horizon),
                                                     key_for(val_c, cfg), threads_for(val_c, cfg));
            const auto j = mcarma::to_json(rep);
            if (!val_c.out.empty()) write_out(val_c.out, j.dump(2) + "\n");
            for (const auto& m : rep.metrics) std::cout << m.metric << ": max|z| = " << m.max_abs_z << "\n";
            if (rep.paths) std::cout << "path min margin: " << rep.paths->min_margin << "\n";
            std::cout << (rep.pass ? "PASS" : "FAIL") << "\n";
            return rep.pass ? kPass : kFail;
        }
        if (stochvol->parsed()) {
            const auto cfg = mcarma::load_config_file(sv_c.config);
            const auto model = cfg.stoch_model();
            const auto rep = mcarma::compare_report(model, sv_paths.value_or(cfg.stochvol->paths),
                                                    sv_returns.value_or(cfg.stochvol->returns), key_for(sv_c, cfg),
                                                    cfg.stochvol->lags, threads_for(sv_c, cfg));
            if (!sv_c.out.empty()) write_out(sv_c.out, mcarma::to_json(rep).dump(2) + "\n");
            if (!returns_csv_path.empty()) write_out(returns_csv_path, mcarma::returns_csv(rep.returns));
            for (const auto& m : rep.metrics) std::cout << m.metric << ": max|z| = " << m.max_abs_z << "\n";
            std::cout << "clamp fraction: " << rep.clamp_fraction << "\n" << (rep.pass ? "PASS" : "FAIL") << "\n";
            return rep.pass ? kPass : kFail;
        }
    } catch (const mcarma::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
