#pragma once

#include "mcarma/linop.hpp"
#include "mcarma/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <optional>
#include <string>

namespace mcarma {

/// Orthant(d), PSD(d) or a p-fold product of either; product elements are stacked vertically.
struct ConeSpec {
    enum class Base { Orthant, PSD };

    Base base = Base::Orthant;
    int d = 1;
    int copies = 1;
    double tol = 1e-9;

    static ConeSpec orthant(int d, double tol = 1e-9) { return make(Base::Orthant, d, 1, tol); }
    static ConeSpec psd(int d, double tol = 1e-9) { return make(Base::PSD, d, 1, tol); }
    static ConeSpec product(const ConeSpec& base, int p) { return make(base.base, base.d, base.copies * p, base.tol); }

    ConeSpec single() const { return make(base, d, 1, tol); }
    bool is_psd() const { return base == Base::PSD; }

    /// Shape of one factor; the orthant acts on d x 1 vectors.
    Eigen::Index rows() const { return d; }
    Eigen::Index cols() const { return base == Base::PSD ? d : 1; }

    std::string name() const {
        std::string s = (base == Base::PSD ? "psd(" : "orthant(") + std::to_string(d) + ")";
        return copies > 1 ? s + "^" + std::to_string(copies) : s;
    }

private:
    static ConeSpec make(Base b, int d, int p, double tol) {
        if (d < 1 || p < 1) throw std::invalid_argument("ConeSpec: d and copies must be >= 1");
        if (tol < 0) throw std::invalid_argument("ConeSpec: tolerance must be nonnegative");
        ConeSpec c;
        c.base = b;
        c.d = d;
        c.copies = p;
        c.tol = tol;
        return c;
    }
};

struct Membership {
    bool inside = false;
    double margin = 0.0;     ///< min entry (orthant) or min eigenvalue of the symmetric part (PSD)
    double asymmetry = 0.0;  ///< max |x - x^T| (PSD only)
    explicit operator bool() const { return inside; }
};

namespace detail {

inline void check_cone_shape(const ConeSpec& cone, const Mat& x) {
    const bool ok = cone.base == ConeSpec::Base::Orthant
                        ? x.size() == static_cast<Eigen::Index>(cone.d) * cone.copies
                        : (x.rows() == static_cast<Eigen::Index>(cone.d) * cone.copies && x.cols() == cone.d);
    if (!ok)
        throw DimensionError("cone " + cone.name() + ": element of shape " + std::to_string(x.rows()) + "x" +
                             std::to_string(x.cols()) + " does not match");
}

inline double min_sym_eig(const Mat& x) {
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(x), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace detail

/// Cone membership with an explicit tolerance (defaults to cone.tol).
inline Membership contains(const ConeSpec& cone, const Mat& x, std::optional<double> tol = std::nullopt) {
    detail::check_cone_shape(cone, x);
    const double t = tol.value_or(cone.tol);
    Membership out;
    if (cone.base == ConeSpec::Base::Orthant) {
        out.margin = x.minCoeff();
        out.inside = out.margin >= -t;
        return out;
    }
    out.margin = std::numeric_limits<double>::infinity();
    for (int b = 0; b < cone.copies; ++b) {
        const Mat blk = x.middleRows(static_cast<Eigen::Index>(b) * cone.d, cone.d);
        out.asymmetry = std::max(out.asymmetry, (blk - blk.transpose()).cwiseAbs().maxCoeff());
        out.margin = std::min(out.margin, detail::min_sym_eig(blk));
    }
    out.inside = out.asymmetry <= t && out.margin >= -t;
    return out;
}

enum class VerdictStatus { CertifiedPositive, SampledPositive, Indeterminate, Refuted };

inline const char* to_string(VerdictStatus s) {
    switch (s) {
        case VerdictStatus::CertifiedPositive: return "CertifiedPositive";
        case VerdictStatus::SampledPositive: return "SampledPositive";
        case VerdictStatus::Indeterminate: return "Indeterminate";
        case VerdictStatus::Refuted: return "Refuted";
    }
    return "Indeterminate";
}

struct Witness {
    Mat element;               ///< cone element fed to the operator
    Mat image;                 ///< its image
    std::optional<Mat> direction;  ///< dual direction v for quasi-positivity
    std::optional<double> parameter;  ///< time s, lambda, or t at which the violation occurs
    double margin = 0.0;
    std::string note;
};

struct PositivityVerdict {
    VerdictStatus status = VerdictStatus::Indeterminate;
    std::size_t samples = 0;
    std::optional<Witness> witness;
    double margin = std::numeric_limits<double>::infinity();
    std::string reason;

    bool refuted() const { return status == VerdictStatus::Refuted; }
    bool positive() const {
        return status == VerdictStatus::CertifiedPositive || status == VerdictStatus::SampledPositive;
    }

    static PositivityVerdict certified(std::string why = {}) {
        PositivityVerdict v;
        v.status = VerdictStatus::CertifiedPositive;
        v.reason = std::move(why);
        return v;
    }
    static PositivityVerdict refute(Witness w, std::string why = {}) {
        PositivityVerdict v;
        v.status = VerdictStatus::Refuted;
        v.margin = w.margin;
        v.witness = std::move(w);
        v.reason = std::move(why);
        return v;
    }
    static PositivityVerdict indeterminate(std::string why) {
        PositivityVerdict v;
        v.status = VerdictStatus::Indeterminate;
        v.reason = std::move(why);
        return v;
    }
};

/// Reduction used for compositions and conjunctions: Refuted dominates, then Indeterminate, then Sampled.
inline PositivityVerdict combine(const PositivityVerdict& a, const PositivityVerdict& b) {
    PositivityVerdict out = static_cast<int>(a.status) >= static_cast<int>(b.status) ? a : b;
    out.samples = a.samples + b.samples;
    out.margin = std::min(a.margin, b.margin);
    if (!a.reason.empty() && !b.reason.empty() && a.reason != b.reason && out.status != VerdictStatus::Refuted)
        out.reason = a.reason + "; " + b.reason;
    else if (out.reason.empty())
        out.reason = a.reason.empty() ? b.reason : a.reason;
    return out;
}

inline nlohmann::json mat_to_json(const Mat& x) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        nlohmann::json r = nlohmann::json::array();
        for (Eigen::Index j = 0; j < x.cols(); ++j) r.push_back(x(i, j));
        rows.push_back(r);
    }
    return rows;
}

inline nlohmann::json to_json(const PositivityVerdict& v) {
    nlohmann::json j;
    j["status"] = to_string(v.status);
    j["samples"] = v.samples;
    j["margin"] = std::isfinite(v.margin) ? nlohmann::json(v.margin) : nlohmann::json(nullptr);
    if (!v.reason.empty()) j["reason"] = v.reason;
    if (v.witness) {
        nlohmann::json w;
        w["element"] = mat_to_json(v.witness->element);
        w["image"] = mat_to_json(v.witness->image);
        if (v.witness->direction) w["direction"] = mat_to_json(*v.witness->direction);
        if (v.witness->parameter) w["parameter"] = *v.witness->parameter;
        w["margin"] = v.witness->margin;
        if (!v.witness->note.empty()) w["note"] = v.witness->note;
        j["witness"] = w;
    }
    return j;
}

struct SamplingOptions {
    std::size_t samples = 2000;
    StreamKey key{0x5eed, 0};
};

namespace detail {

inline void check_op_cone(const LinOpNM& op, const ConeSpec& cone) {
    const Eigen::Index need = static_cast<Eigen::Index>(cone.d) * (cone.is_psd() ? cone.d : 1) * cone.copies;
    if (op.dim() != need) throw DimensionError("operator dimension does not match cone " + cone.name());
}

/// Reshape a cone element to the operator's argument shape (same vec layout for orthants).
inline Mat to_op_shape(const LinOpNM& op, const Mat& x) { return unvec(vec(x), op.n(), op.m()); }

inline Mat to_cone_shape(const ConeSpec& cone, const Mat& y) {
    if (cone.is_psd()) return y;
    return unvec(vec(y), static_cast<Eigen::Index>(cone.d) * cone.copies, 1);
}

inline Vec unit_gaussian(RngStream& rng, Eigen::Index d) {
    Vec x(d);
    do {
        for (Eigen::Index i = 0; i < d; ++i) x(i) = rng.normal();
    } while (x.norm() < 1e-12);
    return x / x.norm();
}

/// Extreme ray of a product PSD cone: x x^T placed in block b.
inline Mat psd_ray(const ConeSpec& cone, const Vec& x, int b) {
    Mat u = Mat::Zero(static_cast<Eigen::Index>(cone.d) * cone.copies, cone.d);
    u.middleRows(static_cast<Eigen::Index>(b) * cone.d, cone.d) = x * x.transpose();
    return u;
}

}  // namespace detail

/// Decide op in pi(C). Orthant: exact entrywise test. PSD: structural tags certify, otherwise ray sampling.
inline PositivityVerdict is_positive_operator(const LinOpNM& op, const ConeSpec& cone, const SamplingOptions& opt = {}) {
    detail::check_op_cone(op, cone);
    const double tol = cone.tol * std::max(1.0, op.rep().cwiseAbs().maxCoeff());
    if (!cone.is_psd()) {
        Eigen::Index i = 0, j = 0;
        const double mn = op.rep().minCoeff(&i, &j);
        PositivityVerdict v;
        if (mn >= -tol) {
            v = PositivityVerdict::certified("nonnegative matrix representation");
            v.margin = mn;
            return v;
        }
        Witness w;
        w.element = Mat::Zero(op.dim(), 1);
        w.element(j) = 1.0;
        w.image = op.rep().col(j);
        w.margin = mn;
        w.note = "entry (" + std::to_string(i) + "," + std::to_string(j) + ") of the representation is negative";
        return PositivityVerdict::refute(w, "negative entry in representation");
    }
    if (op.tag() == OpTag::Zero || op.tag() == OpTag::Identity)
        return PositivityVerdict::certified(std::string(to_string(op.tag())) + " operator");
    if (op.tag() == OpTag::Conjugation && cone.copies == 1)
        return PositivityVerdict::certified("nonnegative combination of conjugations");

    RngStream rng(opt.key);
    PositivityVerdict v;
    v.status = VerdictStatus::SampledPositive;
    v.reason = "extreme-ray sampling";
    const int d = cone.d;
    auto test_ray = [&](const Vec& x, int b) -> std::optional<PositivityVerdict> {
        const Mat u = detail::psd_ray(cone, x, b);
        const Mat y = detail::to_cone_shape(cone, op.apply(detail::to_op_shape(op, u)));
        const Membership mem = contains(cone, y, tol);
        ++v.samples;
        v.margin = std::min(v.margin, mem.margin);
        if (mem.inside) return std::nullopt;
        Witness w;
        w.element = u;
        w.image = y;
        w.margin = std::min(mem.margin, -mem.asymmetry);
        w.note = mem.asymmetry > tol ? "image is not symmetric" : "image has a negative eigenvalue";
        return PositivityVerdict::refute(w, "extreme ray mapped outside the cone");
    };
    for (int b = 0; b < cone.copies; ++b) {
        for (int i = 0; i < d; ++i) {
            if (auto r = test_ray(Vec::Unit(d, i), b)) return *r;
            for (int k = i + 1; k < d; ++k) {
                Vec x = (Vec::Unit(d, i) + Vec::Unit(d, k)) / std::sqrt(2.0);
                if (auto r = test_ray(x, b)) return *r;
                x = (Vec::Unit(d, i) - Vec::Unit(d, k)) / std::sqrt(2.0);
                if (auto r = test_ray(x, b)) return *r;
            }
        }
    }
    for (std::size_t s = 0; s < opt.samples; ++s) {
        const int b = static_cast<int>(s % static_cast<std::size_t>(cone.copies));
        if (auto r = test_ray(detail::unit_gaussian(rng, d), b)) return *r;
    }
    return v;
}

/// Decide whether e^{t op} stays in pi(C) for all t >= 0.
inline PositivityVerdict is_quasi_positive(const LinOpNM& op, const ConeSpec& cone, const SamplingOptions& opt = {}) {
    detail::check_op_cone(op, cone);
    const double tol = cone.tol * std::max(1.0, op.rep().cwiseAbs().maxCoeff());
    if (!cone.is_psd()) {
        PositivityVerdict v = PositivityVerdict::certified("off-diagonal entries nonnegative (Metzler)");
        const Mat& R = op.rep();
        double worst = std::numeric_limits<double>::infinity();
        Eigen::Index wi = -1, wj = -1;
        for (Eigen::Index i = 0; i < R.rows(); ++i)
            for (Eigen::Index j = 0; j < R.cols(); ++j)
                if (i != j && R(i, j) < worst) {
                    worst = R(i, j);
                    wi = i;
                    wj = j;
                }
        if (wi < 0) return v;
        v.margin = worst;
        if (worst >= -tol) return v;
        Witness w;
        w.element = Mat::Zero(op.dim(), 1);
        w.element(wj) = 1.0;
        w.direction = Mat::Zero(op.dim(), 1);
        (*w.direction)(wi) = 1.0;
        w.image = R.col(wj);
        w.margin = worst;
        w.note = "<A u, v> < 0 for orthogonal u = e_" + std::to_string(wj + 1) + ", v = e_" + std::to_string(wi + 1);
        return PositivityVerdict::refute(w, "negative off-diagonal entry");
    }
    if (op.tag() == OpTag::Zero || op.tag() == OpTag::Identity || op.tag() == OpTag::LyapunovForm ||
        (op.tag() == OpTag::Conjugation && cone.copies == 1))
        return PositivityVerdict::certified(std::string(to_string(op.tag())) + " operator is quasi-positive");

    RngStream rng(opt.key);
    PositivityVerdict v;
    v.status = VerdictStatus::SampledPositive;
    v.reason = "orthogonal-pair sampling with semigroup cross-check";
    const int d = cone.d;
    auto test_pair = [&](const Vec& x, int bx, const Vec& y, int by) -> std::optional<PositivityVerdict> {
        const Mat u = detail::psd_ray(cone, x, bx);
        const Mat w = detail::psd_ray(cone, y, by);
        const Mat img = detail::to_cone_shape(cone, op.apply(detail::to_op_shape(op, u)));
        const double val = frob(img, w);
        ++v.samples;
        v.margin = std::min(v.margin, val);
        if (val >= -tol) return std::nullopt;
        Witness wt;
        wt.element = u;
        wt.image = img;
        wt.direction = w;
        wt.margin = val;
        wt.note = "<A u, v> < 0 for orthogonal cone elements";
        return PositivityVerdict::refute(wt, "orthogonality condition violated");
    };
    auto orth_pair = [&](int bx, int by) {
        Vec x = detail::unit_gaussian(rng, d);
        Vec y = detail::unit_gaussian(rng, d);
        if (bx == by) {
            y -= y.dot(x) * x;
            if (y.norm() < 1e-10) {
                Eigen::Index k = 0;
                x.cwiseAbs().minCoeff(&k);
                y = Vec::Unit(d, k) - x(k) * x;
            }
            y /= y.norm();
        }
        return std::pair{x, y};
    };
    for (int bx = 0; bx < cone.copies; ++bx)
        for (int by = 0; by < cone.copies; ++by)
            for (int i = 0; i < d; ++i)
                for (int k = 0; k < d; ++k) {
                    if (bx == by && i == k) continue;
                    if (auto r = test_pair(Vec::Unit(d, i), bx, Vec::Unit(d, k), by)) return *r;
                }
    if (d > 1 || cone.copies > 1) {
        for (std::size_t s = 0; s < opt.samples; ++s) {
            const int bx = static_cast<int>(s % static_cast<std::size_t>(cone.copies));
            const int by = static_cast<int>((s / static_cast<std::size_t>(cone.copies)) % static_cast<std::size_t>(cone.copies));
            if (bx == by && d == 1) continue;
            auto [x, y] = orth_pair(bx, by);
            if (auto r = test_pair(x, bx, y, by)) return *r;
        }
    }
    const double nrm = op.rep().norm();
    if (nrm > 0) {
        SamplingOptions sub = opt;
        sub.samples = std::max<std::size_t>(opt.samples / 4, 50);
        for (double t : {0.1, 1.0, 10.0}) {
            sub.key = opt.key.child(static_cast<std::uint64_t>(t * 1000));
            const LinOpNM semigroup = LinOpNM::general(op.n(), op.m(), expm((t / nrm) * op.rep()));
            PositivityVerdict pv = is_positive_operator(semigroup, cone, sub);
            v.samples += pv.samples;
            if (pv.refuted()) {
                pv.witness->parameter = t / nrm;
                pv.witness->note = "exp(t A) leaves the cone: " + pv.witness->note;
                pv.reason = "semigroup cross-check failed";
                return pv;
            }
        }
    }
    return v;
}

}  // namespace mcarma
