#pragma once

#include "mcarma/levy.hpp"
#include "mcarma/model.hpp"
#include "mcarma/positivity.hpp"
#include "mcarma/simulate.hpp"
#include "mcarma/stochvol.hpp"
#include "mcarma/toml.hpp"

#include "json.hpp"

#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace mcarma {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ModelKind { MCARMA, OU, WellBalancedOU };

inline const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::MCARMA: return "mcarma";
        case ModelKind::OU: return "ou";
        case ModelKind::WellBalancedOU: return "wellbalanced_ou";
    }
    return "mcarma";
}

struct SimulationConfig {
    std::size_t paths = 100;
    double horizon = 10.0;
    double dt = 0.1;
    std::uint64_t seed = 1;
    double tol = 1e-10;
    std::string start = "stationary";  ///< stationary | zero
    unsigned threads = 0;
};

struct OutputConfig {
    std::vector<double> lags{0.0, 1.0, 2.0};
};

struct StochvolConfig {
    Vec alpha, beta;
    double delta = 1.0;
    double delta_sim = 1.0 / 64.0;
    std::size_t paths = 100;
    std::size_t returns = 1000;
    int lags = 3;
};

struct FactorConfig {
    std::vector<LinOpNM> A;        ///< linear factors of P(lambda)
    std::vector<Mat> hadamard_C;   ///< commuting families for the orthant sufficient condition
    std::vector<Mat> hadamard_A;
};

/// Parsed and validated model document.
struct ModelConfig {
    int spec_version = 1;
    ModelKind kind = ModelKind::MCARMA;
    Eigen::Index n = 1, m = 1;
    int p = 1, q = 0;
    std::vector<LinOpNM> A, C;  ///< for ou kinds A[0] is the mean-reversion operator, C is unused
    std::optional<ConeSpec> cone;
    LevySpec levy;
    SimulationConfig sim;
    OutputConfig output;
    std::optional<StochvolConfig> stochvol;
    std::optional<FactorConfig> factors;

    /// The operator A of dX = -A X dt + dL (ou kinds only).
    const LinOpNM& ou_operator() const {
        if (kind == ModelKind::MCARMA) throw ConfigError("ou_operator: config describes a general MCARMA model");
        return A.front();
    }

    MCARMAModel model() const {
        switch (kind) {
            case ModelKind::MCARMA: return MCARMAModel(A, C, levy, cone);
            case ModelKind::OU: return MCARMAModel({A.front().scaled(-1.0)}, {LinOpNM::identity(n, m)}, levy, cone);
            case ModelKind::WellBalancedOU: return wellbalanced_as_mcarma(A.front(), levy).with_cone(cone);
        }
        throw std::logic_error("unknown model kind");
    }

    StochCovModel stoch_model() const {
        if (!stochvol) throw ConfigError("config has no [stochvol] section");
        StochCovModel s;
        s.d = static_cast<int>(n);
        s.alpha = stochvol->alpha;
        s.beta = stochvol->beta;
        s.Delta = stochvol->delta;
        s.Delta_sim = stochvol->delta_sim;
        if (kind == ModelKind::MCARMA) {
            s.kind = CovKind::MCARMA;
            s.mcarma = model();
        } else {
            s.kind = kind == ModelKind::OU ? CovKind::OU : CovKind::WellBalanced;
            s.A = A.front();
            s.levy = levy;
        }
        return s;
    }
};

namespace config_detail {

using nlohmann::json;

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a table");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

inline const json& need(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    return j.at(key);
}

inline double num(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + ": expected a number");
    return v.get<double>();
}

inline long long integer(const json& v, const std::string& where) {
    if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
    return v.get<long long>();
}

inline std::string str(const json& v, const std::string& where) {
    if (!v.is_string()) throw ConfigError(where + ": expected a string");
    return v.get<std::string>();
}

inline Mat matrix(const json& v, Eigen::Index rows, Eigen::Index cols, const std::string& where) {
    // column vectors may be written flat
    if (cols == 1 && v.is_array() && !v.empty() && v.front().is_number()) {
        if (static_cast<Eigen::Index>(v.size()) != rows) throw ConfigError(where + ": expected " + std::to_string(rows) + " entries");
        Mat out(rows, 1);
        for (Eigen::Index i = 0; i < rows; ++i) out(i, 0) = num(v[static_cast<std::size_t>(i)], where);
        return out;
    }
    if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != rows)
        throw ConfigError(where + ": expected a " + std::to_string(rows) + "x" + std::to_string(cols) + " matrix (array of rows)");
    Mat out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json& row = v[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw ConfigError(where + ": row " + std::to_string(i + 1) + " must have " + std::to_string(cols) + " entries");
        for (Eigen::Index k = 0; k < cols; ++k) out(i, k) = num(row[static_cast<std::size_t>(k)], where);
    }
    if (!out.allFinite()) throw ConfigError(where + ": non-finite entry");
    return out;
}

inline Mat square_matrix(const json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) throw ConfigError(where + ": expected a square matrix");
    const auto d = static_cast<Eigen::Index>(v.size());
    return matrix(v, d, d, where);
}

inline json to_rows(const Mat& x) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index k = 0; k < x.cols(); ++k) r.push_back(x(i, k));
        rows.push_back(r);
    }
    return rows;
}

inline LinOpNM op_from(const json& j, Eigen::Index n, Eigen::Index m, const std::string& where) {
    const std::string kind = str(need(j, "kind", where), where + ".kind");
    auto require_square_space = [&] {
        if (n != m) throw ConfigError(where + ": '" + kind + "' needs a square state space (n = m)");
    };
    if (kind == "general") {
        check_keys(j, {"kind", "index", "matrix"}, where);
        return LinOpNM::general(n, m, matrix(need(j, "matrix", where), n * m, n * m, where + ".matrix"));
    }
    if (kind == "conjugation") {
        check_keys(j, {"kind", "index", "a", "generators"}, where);
        require_square_space();
        std::vector<Mat> gens;
        if (j.contains("a")) gens.push_back(matrix(j.at("a"), n, n, where + ".a"));
        if (j.contains("generators")) {
            if (!j.at("generators").is_array()) throw ConfigError(where + ".generators: expected an array of matrices");
            for (const auto& g : j.at("generators")) gens.push_back(matrix(g, n, n, where + ".generators"));
        }
        if (gens.empty()) throw ConfigError(where + ": conjugation needs 'a' or 'generators'");
        return LinOpNM::conjugation_sum(gens);
    }
    if (kind == "lyapunov") {
        check_keys(j, {"kind", "index", "a"}, where);
        require_square_space();
        return LinOpNM::lyapunov(matrix(need(j, "a", where), n, n, where + ".a"));
    }
    if (kind == "zero") {
        check_keys(j, {"kind", "index"}, where);
        return LinOpNM::zero(n, m);
    }
    if (kind == "identity") {
        check_keys(j, {"kind", "index"}, where);
        return LinOpNM::identity(n, m);
    }
    throw ConfigError(where + ": unknown operator kind '" + kind + "'");
}

inline json op_to(const LinOpNM& op, std::optional<int> index) {
    json j;
    if (index) j["index"] = *index;
    switch (op.tag()) {
        case OpTag::Conjugation:
            j["kind"] = "conjugation";
            if (op.generators().size() == 1) {
                j["a"] = to_rows(op.generators().front());
            } else {
                j["generators"] = json::array();
                for (const auto& g : op.generators()) j["generators"].push_back(to_rows(g));
            }
            break;
        case OpTag::LyapunovForm:
            j["kind"] = "lyapunov";
            j["a"] = to_rows(op.generators().front());
            break;
        case OpTag::Zero: j["kind"] = "zero"; break;
        case OpTag::Identity: j["kind"] = "identity"; break;
        case OpTag::General:
            j["kind"] = "general";
            j["matrix"] = to_rows(op.rep());
            break;
    }
    return j;
}

/// Operator list where entry `index` (default: position + base) selects the slot.
inline std::vector<LinOpNM> op_list(const json& arr, std::size_t count, int base, Eigen::Index n, Eigen::Index m,
                                    const std::string& where, bool fill_zero) {
    if (!arr.is_array()) throw ConfigError(where + ": expected an array of tables ([[" + where + "]])");
    std::vector<std::optional<LinOpNM>> slots(count);
    for (std::size_t k = 0; k < arr.size(); ++k) {
        const std::string w = where + "[" + std::to_string(k) + "]";
        const json& e = arr[k];
        if (!e.is_object()) throw ConfigError(w + ": expected a table");
        const long long idx = e.contains("index") ? integer(e.at("index"), w + ".index") : static_cast<long long>(k) + base;
        if (idx < base || idx >= static_cast<long long>(count) + base)
            throw ConfigError(w + ": index " + std::to_string(idx) + " out of range");
        auto& slot = slots[static_cast<std::size_t>(idx - base)];
        if (slot) throw ConfigError(w + ": index " + std::to_string(idx) + " given twice");
        slot = op_from(e, n, m, w);
    }
    std::vector<LinOpNM> out;
    for (std::size_t k = 0; k < count; ++k) {
        if (!slots[k]) {
            if (!fill_zero) throw ConfigError(where + ": operator " + std::to_string(k + static_cast<std::size_t>(base)) + " missing");
            out.push_back(LinOpNM::zero(n, m));
        } else {
            out.push_back(*slots[k]);
        }
    }
    return out;
}

inline GammaLaw gamma_from(const json& j, const std::string& where) {
    GammaLaw g{num(need(j, "shape", where), where + ".shape"), num(need(j, "rate", where), where + ".rate")};
    if (!(g.shape > 0 && g.rate > 0)) throw ConfigError(where + ": gamma shape and rate must be positive");
    return g;
}

inline LevySpec levy_from(const json& j, Eigen::Index n, Eigen::Index m) {
    const std::string w = "levy";
    check_keys(j, {"drift", "rate", "gaussian", "jumps"}, w);
    const Mat drift = j.contains("drift") ? matrix(j.at("drift"), n, m, "levy.drift") : Mat::Zero(n, m);
    const double rate = j.contains("rate") ? num(j.at("rate"), "levy.rate") : 0.0;
    LevySpec l = LevySpec::pure_drift(drift);
    if (j.contains("gaussian")) l.gaussian = op_from(j.at("gaussian"), n, m, "levy.gaussian");
    if (rate > 0.0) {
        const json& jj = need(j, "jumps", w);
        const std::string law = str(need(jj, "law", "levy.jumps"), "levy.jumps.law");
        l.rate = rate;
        if (law == "atoms") {
            check_keys(jj, {"law", "atoms"}, "levy.jumps");
            AtomsLaw a;
            const json& arr = need(jj, "atoms", "levy.jumps");
            if (!arr.is_array() || arr.empty()) throw ConfigError("levy.jumps.atoms: expected a non-empty array");
            for (const auto& e : arr) {
                check_keys(e, {"size", "prob"}, "levy.jumps.atoms");
                a.atoms.push_back({matrix(need(e, "size", "levy.jumps.atoms"), n, m, "levy.jumps.atoms.size"),
                                   e.contains("prob") ? num(e.at("prob"), "levy.jumps.atoms.prob") : 1.0 / static_cast<double>(arr.size())});
            }
            l.jumps = a;
        } else if (law == "scaled_atom") {
            check_keys(jj, {"law", "base", "shape", "rate"}, "levy.jumps");
            l.jumps = ScaledAtomLaw{matrix(need(jj, "base", "levy.jumps"), n, m, "levy.jumps.base"), gamma_from(jj, "levy.jumps")};
        } else if (law == "rank_one_psd") {
            check_keys(jj, {"law", "shape", "rate"}, "levy.jumps");
            if (n != m) throw ConfigError("levy.jumps: rank_one_psd needs n = m");
            l.jumps = RankOnePsdLaw{static_cast<int>(n), gamma_from(jj, "levy.jumps")};
        } else {
            throw ConfigError("levy.jumps.law: unknown law '" + law + "'");
        }
    } else if (rate < 0.0) {
        throw ConfigError("levy.rate: must be nonnegative");
    }
    try {
        l.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("levy: ") + e.what());
    }
    return l;
}

inline json levy_to(const LevySpec& l) {
    json j;
    j["drift"] = to_rows(l.drift);
    j["rate"] = l.rate;
    if (l.has_gaussian()) j["gaussian"] = op_to(l.gaussian, std::nullopt);
    if (l.rate > 0.0) {
        json jj;
        std::visit(
            [&](const auto& law) {
                using T = std::decay_t<decltype(law)>;
                if constexpr (std::is_same_v<T, AtomsLaw>) {
                    jj["law"] = "atoms";
                    jj["atoms"] = json::array();
                    for (const auto& a : law.atoms) jj["atoms"].push_back({{"size", to_rows(a.size)}, {"prob", a.prob}});
                } else if constexpr (std::is_same_v<T, ScaledAtomLaw>) {
                    jj["law"] = "scaled_atom";
                    jj["base"] = to_rows(law.base);
                    jj["shape"] = law.magnitude.shape;
                    jj["rate"] = law.magnitude.rate;
                } else {
                    jj["law"] = "rank_one_psd";
                    jj["shape"] = law.magnitude.shape;
                    jj["rate"] = law.magnitude.rate;
                }
            },
            l.jumps);
        j["jumps"] = jj;
    }
    return j;
}

inline Vec vector_from(const json& v, Eigen::Index d, const std::string& where) { return matrix(v, d, 1, where).col(0); }

}  // namespace config_detail

/// Schema-validate a parsed document and build the in-memory configuration.
inline ModelConfig load_config(const nlohmann::json& doc) {
    using namespace config_detail;
    check_keys(doc, {"spec_version", "kind", "dims", "orders", "operators", "cone", "levy", "simulation", "output", "factors", "stochvol"},
               "config");
    ModelConfig c;
    const long long ver = integer(need(doc, "spec_version", "config"), "spec_version");
    if (ver != 1) throw ConfigError("spec_version: unsupported version " + std::to_string(ver) + " (expected 1)");
    if (doc.contains("kind")) {
        const std::string k = str(doc.at("kind"), "kind");
        if (k == "mcarma") c.kind = ModelKind::MCARMA;
        else if (k == "ou") c.kind = ModelKind::OU;
        else if (k == "wellbalanced_ou") c.kind = ModelKind::WellBalancedOU;
        else throw ConfigError("kind: unknown model kind '" + k + "'");
    }
    const json& dims = need(doc, "dims", "config");
    check_keys(dims, {"n", "m"}, "dims");
    c.n = integer(need(dims, "n", "dims"), "dims.n");
    c.m = dims.contains("m") ? integer(dims.at("m"), "dims.m") : c.n;
    if (c.n < 1 || c.m < 1) throw ConfigError("dims: n and m must be >= 1");

    const bool ou_kind = c.kind != ModelKind::MCARMA;
    if (doc.contains("factors")) {
        const json& f = doc.at("factors");
        check_keys(f, {"A", "hadamard_C", "hadamard_A"}, "factors");
        FactorConfig fc;
        if (f.contains("A")) {
            const json& arr = f.at("A");
            fc.A = op_list(arr, arr.is_array() ? arr.size() : 0, 1, c.n, c.m, "factors.A", false);
        }
        auto mats = [&](const char* key) {
            std::vector<Mat> out;
            if (!f.contains(key)) return out;
            if (!f.at(key).is_array()) throw ConfigError(std::string("factors.") + key + ": expected an array of matrices");
            for (const auto& e : f.at(key)) out.push_back(square_matrix(e, std::string("factors.") + key));
            return out;
        };
        fc.hadamard_C = mats("hadamard_C");
        fc.hadamard_A = mats("hadamard_A");
        c.factors = fc;
    }

    if (doc.contains("orders")) {
        const json& o = doc.at("orders");
        check_keys(o, {"p", "q"}, "orders");
        c.p = static_cast<int>(integer(need(o, "p", "orders"), "orders.p"));
        c.q = o.contains("q") ? static_cast<int>(integer(o.at("q"), "orders.q")) : 0;
    } else if (c.factors && !c.factors->A.empty()) {
        c.p = static_cast<int>(c.factors->A.size());
    } else if (!ou_kind) {
        throw ConfigError("config: missing [orders]");
    }
    if (ou_kind && (c.p != 1 || c.q != 0)) throw ConfigError("orders: ou kinds have p = 1, q = 0");
    if (c.p < 1 || c.q < 0 || c.q >= c.p) throw ConfigError("orders: need p >= 1 and 0 <= q < p");

    const json ops = doc.contains("operators") ? doc.at("operators") : json::object();
    check_keys(ops, {"A", "C"}, "operators");
    if (ou_kind) {
        if (ops.contains("C")) throw ConfigError("operators.C: not used by ou kinds");
        c.A = op_list(need(ops, "A", "operators"), 1, 1, c.n, c.m, "operators.A", false);
    } else {
        if (ops.contains("A"))
            c.A = op_list(ops.at("A"), static_cast<std::size_t>(c.p), 1, c.n, c.m, "operators.A", true);
        else if (c.factors && !c.factors->A.empty()) {
            if (static_cast<int>(c.factors->A.size()) != c.p) throw ConfigError("factors.A: need exactly p factors");
            c.A = expand_factors(c.factors->A);
        } else
            throw ConfigError("operators: missing A (or [[factors.A]])");
        c.C = op_list(need(ops, "C", "operators"), static_cast<std::size_t>(c.q) + 1, 0, c.n, c.m, "operators.C", true);
    }

    if (doc.contains("cone")) {
        const json& cj = doc.at("cone");
        check_keys(cj, {"type", "tol"}, "cone");
        const std::string t = str(need(cj, "type", "cone"), "cone.type");
        const double tol = cj.contains("tol") ? num(cj.at("tol"), "cone.tol") : 1e-9;
        if (t == "psd") {
            if (c.n != c.m) throw ConfigError("cone: psd cone needs n = m");
            c.cone = ConeSpec::psd(static_cast<int>(c.n), tol);
        } else if (t == "orthant") {
            c.cone = ConeSpec::orthant(static_cast<int>(c.n * c.m), tol);
        } else {
            throw ConfigError("cone.type: unknown cone '" + t + "'");
        }
    }

    c.levy = levy_from(need(doc, "levy", "config"), c.n, c.m);

    if (doc.contains("simulation")) {
        const json& s = doc.at("simulation");
        check_keys(s, {"paths", "horizon", "dt", "seed", "tol", "start", "threads"}, "simulation");
        if (s.contains("paths")) {
            const long long v = integer(s.at("paths"), "simulation.paths");
            if (v < 1) throw ConfigError("simulation.paths: must be >= 1");
            c.sim.paths = static_cast<std::size_t>(v);
        }
        if (s.contains("horizon")) c.sim.horizon = num(s.at("horizon"), "simulation.horizon");
        if (s.contains("dt")) c.sim.dt = num(s.at("dt"), "simulation.dt");
        if (s.contains("seed")) {
            const long long v = integer(s.at("seed"), "simulation.seed");
            if (v < 0) throw ConfigError("simulation.seed: must be >= 0");
            c.sim.seed = static_cast<std::uint64_t>(v);
        }
        if (s.contains("tol")) c.sim.tol = num(s.at("tol"), "simulation.tol");
        if (s.contains("start")) {
            c.sim.start = str(s.at("start"), "simulation.start");
            if (c.sim.start != "stationary" && c.sim.start != "zero") throw ConfigError("simulation.start: stationary or zero");
        }
        if (s.contains("threads")) c.sim.threads = static_cast<unsigned>(integer(s.at("threads"), "simulation.threads"));
        if (!(c.sim.horizon > 0 && c.sim.dt > 0 && c.sim.dt <= c.sim.horizon))
            throw ConfigError("simulation: need 0 < dt <= horizon");
        if (!(c.sim.tol > 0 && c.sim.tol < 1)) throw ConfigError("simulation.tol: must be in (0, 1)");
    }

    if (doc.contains("output")) {
        const json& o = doc.at("output");
        check_keys(o, {"lags"}, "output");
        c.output.lags.clear();
        const json& lags = need(o, "lags", "output");
        if (!lags.is_array()) throw ConfigError("output.lags: expected an array");
        for (const auto& v : lags) {
            const double h = num(v, "output.lags");
            if (h < 0) throw ConfigError("output.lags: lags must be nonnegative");
            c.output.lags.push_back(h);
        }
    }

    if (doc.contains("stochvol")) {
        const json& s = doc.at("stochvol");
        check_keys(s, {"alpha", "beta", "delta", "delta_sim", "paths", "returns", "lags"}, "stochvol");
        if (c.n != c.m) throw ConfigError("stochvol: covariance process must be square");
        StochvolConfig sv;
        sv.alpha = s.contains("alpha") ? vector_from(s.at("alpha"), c.n, "stochvol.alpha") : Vec::Zero(c.n);
        sv.beta = s.contains("beta") ? vector_from(s.at("beta"), c.n, "stochvol.beta") : Vec::Zero(c.n);
        if (s.contains("delta")) sv.delta = num(s.at("delta"), "stochvol.delta");
        sv.delta_sim = s.contains("delta_sim") ? num(s.at("delta_sim"), "stochvol.delta_sim") : sv.delta / 64.0;
        if (s.contains("paths")) sv.paths = static_cast<std::size_t>(integer(s.at("paths"), "stochvol.paths"));
        if (s.contains("returns")) sv.returns = static_cast<std::size_t>(integer(s.at("returns"), "stochvol.returns"));
        if (s.contains("lags")) sv.lags = static_cast<int>(integer(s.at("lags"), "stochvol.lags"));
        if (sv.lags < 1) throw ConfigError("stochvol.lags: must be >= 1");
        c.stochvol = sv;
        try {
            c.stoch_model().validate();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("stochvol: ") + e.what());
        }
    }

    try {
        (void)c.model();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    return c;
}

inline ModelConfig parse_config(const std::string& toml_text) {
    try {
        return load_config(toml::parse(toml_text));
    } catch (const toml::ParseError& e) {
        throw ConfigError(std::string("TOML: ") + e.what());
    }
}

inline ModelConfig load_config_file(const std::string& path) {
    nlohmann::json doc;
    try {
        doc = toml::parse_file(path);
    } catch (const toml::ParseError& e) {
        throw ConfigError(path + ": " + e.what());
    } catch (const std::runtime_error& e) {
        throw ConfigError(e.what());
    }
    return load_config(doc);
}

/// Inverse of load_config: factor families are re-emitted, A is always written expanded.
inline nlohmann::json to_config_json(const ModelConfig& c) {
    using namespace config_detail;
    json j;
    j["spec_version"] = c.spec_version;
    j["kind"] = to_string(c.kind);
    j["dims"] = {{"n", c.n}, {"m", c.m}};
    j["orders"] = {{"p", c.p}, {"q", c.q}};
    json A = json::array(), C = json::array();
    for (std::size_t i = 0; i < c.A.size(); ++i) A.push_back(op_to(c.A[i], static_cast<int>(i) + 1));
    for (std::size_t i = 0; i < c.C.size(); ++i) C.push_back(op_to(c.C[i], static_cast<int>(i)));
    j["operators"]["A"] = A;
    if (!C.empty()) j["operators"]["C"] = C;
    if (c.cone) j["cone"] = {{"type", c.cone->is_psd() ? "psd" : "orthant"}, {"tol", c.cone->tol}};
    j["levy"] = levy_to(c.levy);
    j["simulation"] = {{"paths", c.sim.paths}, {"horizon", c.sim.horizon}, {"dt", c.sim.dt},     {"seed", c.sim.seed},
                       {"tol", c.sim.tol},     {"start", c.sim.start},     {"threads", c.sim.threads}};
    j["output"] = {{"lags", c.output.lags}};
    if (c.factors) {
        json f = json::object();
        if (!c.factors->A.empty()) {
            f["A"] = json::array();
            for (std::size_t i = 0; i < c.factors->A.size(); ++i) f["A"].push_back(op_to(c.factors->A[i], static_cast<int>(i) + 1));
        }
        auto mats = [&](const std::vector<Mat>& ms) {
            json a = json::array();
            for (const auto& x : ms) a.push_back(to_rows(x));
            return a;
        };
        if (!c.factors->hadamard_C.empty()) f["hadamard_C"] = mats(c.factors->hadamard_C);
        if (!c.factors->hadamard_A.empty()) f["hadamard_A"] = mats(c.factors->hadamard_A);
        j["factors"] = f;
    }
    if (c.stochvol) {
        const auto& s = *c.stochvol;
        j["stochvol"] = {{"alpha", std::vector<double>(s.alpha.data(), s.alpha.data() + s.alpha.size())},
                         {"beta", std::vector<double>(s.beta.data(), s.beta.data() + s.beta.size())},
                         {"delta", s.delta},
                         {"delta_sim", s.delta_sim},
                         {"paths", s.paths},
                         {"returns", s.returns},
                         {"lags", s.lags}};
    }
    return j;
}

inline std::string to_toml(const ModelConfig& c) { return toml::dump(to_config_json(c)); }

}  // namespace mcarma
