#pragma once

#include "mcarma/cones.hpp"
#include "mcarma/model.hpp"
#include "mcarma/parallel.hpp"
#include "mcarma/paths.hpp"

#include <chrono>
#include <functional>
#include <vector>

namespace mcarma {

inline std::vector<double> logspace(double lo, double hi, std::size_t count) {
    if (!(lo > 0 && hi > lo) || count < 2) throw std::invalid_argument("logspace: need 0 < lo < hi and count >= 2");
    std::vector<double> g(count);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < count; ++i) g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    return g;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
    std::vector<double> g(count);
    for (std::size_t i = 0; i < count; ++i)
        g[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return g;
}

struct CertificationOptions {
    std::size_t ray_samples = 2000;
    StreamKey key{0xC3A7, 0};
    unsigned threads = 1;
};

namespace detail {

inline const ConeSpec& require_cone(const MCARMAModel& model) {
    if (!model.cone()) throw std::invalid_argument("positivity: the model has no cone attached");
    return *model.cone();
}

/// Reduce verdicts in grid order so the reported witness is the first violation.
inline PositivityVerdict reduce(const std::vector<PositivityVerdict>& vs, PositivityVerdict init) {
    for (const auto& v : vs) {
        if (v.refuted() && !init.refuted()) {
            PositivityVerdict r = v;
            r.samples += init.samples;
            return r;
        }
        init = combine(init, v);
    }
    return init;
}

}  // namespace detail

/// Kernel-side test on a grid: every g(s) must be a positive operator.
inline PositivityVerdict certify_kernel_fn(const std::function<LinOpNM(double)>& g, const ConeSpec& cone,
                                           const std::vector<double>& s_grid, const CertificationOptions& opt = {}) {
    std::vector<PositivityVerdict> out(s_grid.size());
    parallel_for(s_grid.size(), opt.threads, [&](std::size_t i) {
        SamplingOptions so{opt.ray_samples, opt.key.child(i)};
        out[i] = is_positive_operator(g(s_grid[i]), cone, so);
        if (out[i].witness) out[i].witness->parameter = s_grid[i];
    });
    PositivityVerdict v = detail::reduce(out, PositivityVerdict::certified());
    if (v.status == VerdictStatus::CertifiedPositive) v.status = VerdictStatus::SampledPositive;
    v.reason = v.refuted() ? "kernel g(s) leaves pi(C)" : "g(s) in pi(C) on the whole s-grid";
    return v;
}

inline std::vector<double> default_kernel_grid(const MCARMAModel& model) {
    const double tau = std::abs(model.classification().tau);
    return logspace(1e-3, 20.0 / std::max(tau, 1e-3), 200);
}

/// g(s) = C e^{sA} E in pi(C) on an s-grid (default 200 log-spaced points in [1e-3, 20/|tau|]).
inline PositivityVerdict certify_causal_kernel(const MCARMAModel& model, std::vector<double> s_grid = {},
                                               const CertificationOptions& opt = {}) {
    const ConeSpec& cone = detail::require_cone(model);
    if (!model.causal()) throw std::invalid_argument("certify_causal_kernel: model is not causal");
    if (s_grid.empty()) s_grid = default_kernel_grid(model);
    return certify_kernel_fn([&](double s) { return kernel(model, s); }, cone, s_grid, opt);
}

/// Alternating-sign test (-1)^n f^{(n)}(lambda) in pi(C) via central differences with h = lambda 1e-3 2^n.
inline PositivityVerdict check_complete_monotonicity_fn(const std::function<Mat(double)>& f, Eigen::Index n,
                                                        Eigen::Index m, const ConeSpec& cone,
                                                        const std::vector<double>& lambda_grid, int max_order = 4,
                                                        const CertificationOptions& opt = {}) {
    if (max_order < 0 || max_order > 4) throw std::invalid_argument("check_complete_monotonicity: order must be in [0, 4]");
    const std::size_t orders = static_cast<std::size_t>(max_order) + 1;
    std::vector<PositivityVerdict> out(lambda_grid.size() * orders);
    parallel_for(out.size(), opt.threads, [&](std::size_t idx) {
        const double lam = lambda_grid[idx / orders];
        const int ord = static_cast<int>(idx % orders);
        if (!(lam > 0)) throw std::invalid_argument("check_complete_monotonicity: lambda must be positive");
        const double h = lam * 1e-3 * std::ldexp(1.0, ord);
        if (ord > 0 && (h < 1e-200 || lam - 0.5 * ord * h <= 0.0))
            throw std::underflow_error("check_complete_monotonicity: differencing step underflow");
        Mat D;
        double fmax = 0.0;
        if (ord == 0) {
            D = f(lam);
            fmax = D.cwiseAbs().maxCoeff();
        } else {
            double binom = 1.0;
            for (int k = 0; k <= ord; ++k) {
                const Mat fk = f(lam + (0.5 * ord - k) * h);
                fmax = std::max(fmax, fk.cwiseAbs().maxCoeff());
                D = k == 0 ? Mat(binom * fk) : Mat(D + ((k % 2) ? -binom : binom) * fk);
                binom = binom * (ord - k) / (k + 1);
            }
            D /= std::pow(h, ord);
            if (ord % 2) D = -D;
        }
        // round-off floor of the difference stencil
        const double noise = ord == 0 ? 0.0 : 64.0 * 2.2e-16 * fmax * std::ldexp(1.0, ord) / std::pow(h, ord);
        ConeSpec c = cone;
        c.tol = std::max(cone.tol, noise / std::max(1.0, D.cwiseAbs().maxCoeff()));
        SamplingOptions so{opt.ray_samples, opt.key.child(idx)};
        PositivityVerdict v = is_positive_operator(LinOpNM::general(n, m, D), c, so);
        if (v.witness) {
            v.witness->parameter = lam;
            v.witness->note = "order " + std::to_string(ord) + ": " + v.witness->note;
        }
        out[idx] = v;
    });
    PositivityVerdict v = detail::reduce(out, PositivityVerdict::certified());
    if (v.status == VerdictStatus::CertifiedPositive) v.status = VerdictStatus::SampledPositive;
    v.reason = v.refuted() ? "alternating derivative sign pattern violated" : "alternating signs hold on the lambda-grid";
    return v;
}

/// Complete monotonicity of lambda -> Q(lambda) P(lambda)^{-1} (default 30 log-spaced points in (0.01, 100)).
inline PositivityVerdict check_complete_monotonicity(const MCARMAModel& model, std::vector<double> lambda_grid = {},
                                                     int max_order = 4, const CertificationOptions& opt = {}) {
    const ConeSpec& cone = detail::require_cone(model);
    if (!model.causal()) throw std::invalid_argument("check_complete_monotonicity: model is not causal");
    if (lambda_grid.empty()) lambda_grid = logspace(0.01, 100.0, 30);
    return check_complete_monotonicity_fn([&](double l) { return laplace_symbol(model, l); }, model.n(), model.m(), cone,
                                          lambda_grid, max_order, opt);
}

/// A_1 quasi-positive and A_i in pi(C) for i >= 2: quasi-positivity of the companion w.r.t. C^p.
inline PositivityVerdict product_quasi_positive_companion(const MCARMAModel& model, const CertificationOptions& opt = {}) {
    const ConeSpec& cone = detail::require_cone(model);
    PositivityVerdict v = is_quasi_positive(model.A_ops()[0], cone, {opt.ray_samples, opt.key.child(1)});
    if (v.witness) v.witness->note = "A_1: " + v.witness->note;
    for (std::size_t i = 1; i < model.A_ops().size() && !v.refuted(); ++i) {
        PositivityVerdict vi = is_positive_operator(model.A_ops()[i], cone, {opt.ray_samples, opt.key.child(10 + i)});
        if (vi.witness) vi.witness->note = "A_" + std::to_string(i + 1) + ": " + vi.witness->note;
        v = vi.refuted() ? vi : combine(v, vi);
    }
    return v;
}

/// Coefficient conditions for cone-valued outputs from cone-valued initial states (non-stable case).
inline PositivityVerdict certify_internal_positivity(const MCARMAModel& model, const CertificationOptions& opt = {}) {
    PositivityVerdict v = product_quasi_positive_companion(model, opt);
    const ConeSpec& cone = *model.cone();
    for (std::size_t j = 0; j < model.C_ops().size() && !v.refuted(); ++j) {
        PositivityVerdict vj = is_positive_operator(model.C_ops()[j], cone, {opt.ray_samples, opt.key.child(100 + j)});
        if (vj.witness) vj.witness->note = "C_" + std::to_string(j) + ": " + vj.witness->note;
        v = vj.refuted() ? vj : combine(v, vj);
    }
    if (!v.refuted() && model.causal() && model.p() > 1)
        v.reason += "; note: model is causal, these conditions usually force tau >= 0";
    return v;
}

struct PositiveModel {
    MCARMAModel model;
    PositivityVerdict verdict;
};

/// Expand prod_i (lambda I - F_i) into P(lambda) = lambda^p I - sum_j A_j lambda^{p-j}.
inline std::vector<LinOpNM> expand_factors(const std::vector<LinOpNM>& factors) {
    if (factors.empty()) throw std::invalid_argument("expand_factors: no factors");
    const Eigen::Index n = factors[0].n(), m = factors[0].m();
    // coeff[k] multiplies lambda^k
    std::vector<LinOpNM> coeff{LinOpNM::identity(n, m)};
    for (const auto& F : factors) {
        std::vector<LinOpNM> next(coeff.size() + 1, LinOpNM::zero(n, m));
        for (std::size_t k = 0; k < coeff.size(); ++k) {
            next[k + 1] = next[k + 1] + coeff[k];
            next[k] = next[k] - coeff[k] * F;
        }
        coeff = std::move(next);
    }
    const std::size_t p = factors.size();
    std::vector<LinOpNM> A;
    for (std::size_t j = 1; j <= p; ++j) A.push_back(-coeff[p - j]);
    return A;
}

/// Causal positive MCARMA from quasi-positive stable factors and output operators.
inline PositiveModel build_positive_mcar(const std::vector<LinOpNM>& factors, const std::vector<LinOpNM>& C_ops,
                                         const LevySpec& levy, const ConeSpec& cone, const CertificationOptions& opt = {}) {
    PositivityVerdict v = PositivityVerdict::certified();
    for (std::size_t i = 0; i < factors.size(); ++i) {
        const double tau = spectral_bound(factors[i].rep());
        if (!(tau < 0.0))
            throw std::invalid_argument("build_positive_mcar: factor " + std::to_string(i + 1) + " is not stable (tau = " +
                                        std::to_string(tau) + ")");
        PositivityVerdict vi = is_quasi_positive(factors[i], cone, {opt.ray_samples, opt.key.child(200 + i)});
        if (vi.refuted())
            throw std::invalid_argument("build_positive_mcar: factor " + std::to_string(i + 1) + " is not quasi-positive");
        v = combine(v, vi);
    }
    std::vector<LinOpNM> A = expand_factors(factors);
    MCARMAModel model(A, C_ops, levy, cone);

    RngStream rng(opt.key.child(999));
    const Eigen::Index d = model.dim();
    for (std::size_t t = 0; t <= factors.size(); ++t) {
        const cplx lam(rng.normal() * 2.0, rng.normal() * 2.0);
        CMat direct = CMat::Identity(d, d);
        for (const auto& F : factors) {
            CMat f = -F.rep().cast<cplx>();
            f.diagonal().array() += lam;
            direct = direct * f;
        }
        const CMat viaA = operator_polynomials(model, lam).second;
        if ((direct - viaA).norm() > 1e-10 * std::max(1.0, direct.norm()))
            throw std::logic_error("build_positive_mcar: coefficient expansion mismatch");
    }
    if (!model.causal()) throw std::logic_error("build_positive_mcar: assembled model is not causal");

    if (C_ops.size() == 1) {
        PositivityVerdict vc = is_positive_operator(C_ops[0], cone, {opt.ray_samples, opt.key.child(300)});
        if (vc.refuted()) return {model, vc};
        v = combine(v, vc);
    }
    PositivityVerdict cm = check_complete_monotonicity(model, {}, 4, opt);
    if (cm.refuted()) return {model, cm};
    v = combine(v, cm);
    v.reason = "quasi-positive stable factors; completely monotone symbol on the sampled grid";
    return {model, v};
}

/// Sampled sufficient condition for orthant positivity with commuting nonnegative factor families.
inline PositivityVerdict check_hadamard_sufficient(const std::vector<Mat>& C_factors, const std::vector<Mat>& A_factors,
                                                   std::vector<double> s_grid = {}, double tol = 1e-9) {
    if (C_factors.empty() || A_factors.size() < C_factors.size())
        throw std::invalid_argument("check_hadamard_sufficient: need q+1 C-factors and at least q+1 A-factors");
    const Eigen::Index d = C_factors[0].rows();
    std::vector<Mat> all = C_factors;
    all.insert(all.end(), A_factors.begin(), A_factors.end());
    for (const auto& F : all) {
        if (F.rows() != d || F.cols() != d) throw DimensionError("check_hadamard_sufficient: factor shapes differ");
        if (F.minCoeff() < -tol) return PositivityVerdict::indeterminate("a factor has a negative entry");
    }
    for (const auto* fam : {&C_factors, &A_factors})
        for (std::size_t i = 0; i < fam->size(); ++i)
            for (std::size_t j = i + 1; j < fam->size(); ++j) {
                const Mat& X = (*fam)[i];
                const Mat& Y = (*fam)[j];
                if ((X * Y - Y * X).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, X.norm() * Y.norm()))
                    return PositivityVerdict::indeterminate("factor family is not commutative");
            }
    for (std::size_t i = C_factors.size(); i < A_factors.size(); ++i)
        if (!(spectral_bound(A_factors[i]) < 0.0))
            return PositivityVerdict::indeterminate("A-factor " + std::to_string(i + 1) + " beyond q+1 is not stable");
    if (s_grid.empty()) s_grid = linspace(0.25, 50.0, 200);
    PositivityVerdict v;
    v.status = VerdictStatus::SampledPositive;
    v.reason = "sum of exponential differences nonnegative on the s-grid; l-matrix hypotheses not checked";
    for (double s : s_grid) {
        Mat D = Mat::Zero(d, d);
        double scale = 1.0;
        for (std::size_t i = 0; i < C_factors.size(); ++i) {
            const Mat ea = expm(s * A_factors[i]);
            const Mat ec = expm(s * C_factors[i]);
            D += ea - ec;
            scale = std::max({scale, ea.cwiseAbs().maxCoeff(), ec.cwiseAbs().maxCoeff()});
        }
        ++v.samples;
        Eigen::Index r = 0, c = 0;
        const double mn = D.minCoeff(&r, &c);
        v.margin = std::min(v.margin, mn / scale);
        if (mn < -tol * scale) {
            Witness w;
            w.element = Mat::Zero(d, 1);
            w.element(c) = 1.0;
            w.image = D;
            w.parameter = s;
            w.margin = mn;
            w.note = "entry (" + std::to_string(r) + "," + std::to_string(c) + ") negative";
            return PositivityVerdict::refute(w, "exponential-difference condition fails");
        }
    }
    return v;
}

struct PathValidation {
    double min_margin = std::numeric_limits<double>::infinity();
    double scale = 1.0;
    std::size_t worst_path = 0;
    double worst_time = 0.0;
    bool pass = true;
};

/// Cone margin over every path and grid point; pass iff min margin >= -rel_tol * scale.
inline PathValidation validate_paths(const PathBundle& paths, const ConeSpec& cone, double rel_tol = 1e-8) {
    PathValidation r;
    for (const auto& X : paths.X)
        if (X.size()) r.scale = std::max(r.scale, X.cwiseAbs().maxCoeff());
    const bool psd = cone.is_psd();
    for (std::size_t i = 0; i < paths.paths(); ++i)
        for (std::size_t k = 0; k < paths.steps(); ++k) {
            const Mat x = psd ? paths.X_at(i, k) : Mat(paths.X[i].col(static_cast<Eigen::Index>(k)));
            const Membership mem = contains(cone, x, std::numeric_limits<double>::infinity());
            // asymmetry counts against the margin
            const double eff = mem.margin - mem.asymmetry;
            if (eff < r.min_margin) {
                r.min_margin = eff;
                r.worst_path = i;
                r.worst_time = paths.grid[k];
            }
        }
    if (paths.paths() == 0 || paths.steps() == 0) r.min_margin = 0.0;
    r.pass = r.min_margin >= -rel_tol * r.scale;
    return r;
}

inline nlohmann::json to_json(const PathValidation& v) {
    return {{"min_margin", v.min_margin}, {"scale", v.scale}, {"worst_path", v.worst_path},
            {"worst_time", v.worst_time}, {"pass", v.pass}};
}

}  // namespace mcarma
