#pragma once

#include "mcarma/matops.hpp"

#include <functional>
#include <vector>

namespace mcarma {

enum class OpTag { General, Conjugation, LyapunovForm, Zero, Identity };

inline const char* to_string(OpTag t) {
    switch (t) {
        case OpTag::General: return "general";
        case OpTag::Conjugation: return "conjugation";
        case OpTag::LyapunovForm: return "lyapunov";
        case OpTag::Zero: return "zero";
        case OpTag::Identity: return "identity";
    }
    return "general";
}

/// Linear operator on n x m matrices, stored as its nm x nm representation on vec.
///
/// Conjugation carries generators a_k with x -> sum_k a_k x a_k^T; LyapunovForm carries a with x -> a x + x a^T.
class LinOpNM {
public:
    LinOpNM() = default;

    static LinOpNM general(Eigen::Index n, Eigen::Index m, const Mat& rep) {
        if (n < 1 || m < 1) throw DimensionError("LinOpNM: dimensions must be positive");
        if (rep.rows() != n * m || rep.cols() != n * m)
            throw DimensionError("LinOpNM: representation must be " + std::to_string(n * m) + "x" + std::to_string(n * m));
        if (!rep.allFinite()) throw std::invalid_argument("LinOpNM: non-finite representation");
        LinOpNM op;
        op.n_ = n;
        op.m_ = m;
        op.rep_ = rep;
        return op;
    }

    static LinOpNM from_function(Eigen::Index n, Eigen::Index m, const std::function<Mat(const Mat&)>& f) {
        Mat rep(n * m, n * m);
        for (Eigen::Index k = 0; k < n * m; ++k) {
            Vec e = Vec::Zero(n * m);
            e(k) = 1.0;
            rep.col(k) = vec(f(unvec(e, n, m)));
        }
        return general(n, m, rep);
    }

    static LinOpNM conjugation(const Mat& a) { return conjugation_sum({a}); }

    static LinOpNM conjugation_sum(const std::vector<Mat>& gens) {
        if (gens.empty()) throw std::invalid_argument("conjugation_sum: no generators");
        const Eigen::Index d = gens.front().rows();
        Mat rep = Mat::Zero(d * d, d * d);
        for (const auto& a : gens) {
            require_square(a, "conjugation");
            if (a.rows() != d) throw DimensionError("conjugation_sum: generator sizes differ");
            rep += kron(a, a);
        }
        LinOpNM op = general(d, d, rep);
        op.tag_ = OpTag::Conjugation;
        op.gens_ = gens;
        op.verify_tag();
        return op;
    }

    static LinOpNM lyapunov(const Mat& a) {
        require_square(a, "lyapunov");
        const Eigen::Index d = a.rows();
        const Mat I = Mat::Identity(d, d);
        LinOpNM op = general(d, d, kron(I, a) + kron(a, I));
        op.tag_ = OpTag::LyapunovForm;
        op.gens_ = {a};
        op.verify_tag();
        return op;
    }

    static LinOpNM zero(Eigen::Index n, Eigen::Index m) {
        LinOpNM op = general(n, m, Mat::Zero(n * m, n * m));
        op.tag_ = OpTag::Zero;
        return op;
    }

    static LinOpNM identity(Eigen::Index n, Eigen::Index m) {
        LinOpNM op = general(n, m, Mat::Identity(n * m, n * m));
        op.tag_ = OpTag::Identity;
        return op;
    }

    Eigen::Index n() const { return n_; }
    Eigen::Index m() const { return m_; }
    Eigen::Index dim() const { return n_ * m_; }
    const Mat& rep() const { return rep_; }
    OpTag tag() const { return tag_; }
    const std::vector<Mat>& generators() const { return gens_; }
    double norm() const { return rep_.norm(); }

    Mat apply(const Mat& x) const {
        if (x.rows() != n_ || x.cols() != m_) throw DimensionError("LinOpNM::apply: argument shape mismatch");
        return unvec(rep_ * vec(x), n_, m_);
    }
    Mat operator()(const Mat& x) const { return apply(x); }

    /// Composition (*this) o other.
    LinOpNM compose(const LinOpNM& other) const {
        check_same_space(other);
        if (tag_ == OpTag::Identity) return other;
        if (other.tag_ == OpTag::Identity) return *this;
        if (tag_ == OpTag::Zero || other.tag_ == OpTag::Zero) return zero(n_, m_);
        if (tag_ == OpTag::Conjugation && other.tag_ == OpTag::Conjugation) {
            std::vector<Mat> gens;
            for (const auto& a : gens_)
                for (const auto& b : other.gens_) gens.push_back(a * b);
            return conjugation_sum(gens);
        }
        return general(n_, m_, rep_ * other.rep_);
    }

    LinOpNM plus(const LinOpNM& other) const {
        check_same_space(other);
        if (tag_ == OpTag::Zero) return other;
        if (other.tag_ == OpTag::Zero) return *this;
        if (tag_ == OpTag::Conjugation && other.tag_ == OpTag::Conjugation) {
            std::vector<Mat> gens = gens_;
            gens.insert(gens.end(), other.gens_.begin(), other.gens_.end());
            return conjugation_sum(gens);
        }
        if (tag_ == OpTag::LyapunovForm && other.tag_ == OpTag::LyapunovForm) return lyapunov(gens_[0] + other.gens_[0]);
        return general(n_, m_, rep_ + other.rep_);
    }

    LinOpNM scaled(double c) const {
        if (c == 0.0 || tag_ == OpTag::Zero) return zero(n_, m_);
        if (tag_ == OpTag::LyapunovForm) return lyapunov(c * gens_[0]);
        if (tag_ == OpTag::Conjugation && c > 0.0) {
            std::vector<Mat> gens;
            for (const auto& a : gens_) gens.push_back(std::sqrt(c) * a);
            return conjugation_sum(gens);
        }
        if (tag_ == OpTag::Identity && c == 1.0) return *this;
        return general(n_, m_, c * rep_);
    }

    LinOpNM operator*(const LinOpNM& o) const { return compose(o); }
    LinOpNM operator+(const LinOpNM& o) const { return plus(o); }
    LinOpNM operator-(const LinOpNM& o) const { return plus(o.scaled(-1.0)); }
    LinOpNM operator-() const { return scaled(-1.0); }

    /// Re-derive the representation from the tag and compare entrywise.
    void verify_tag(double tol = 1e-12) const {
        if (tag_ != OpTag::Conjugation && tag_ != OpTag::LyapunovForm) return;
        const Eigen::Index d = n_;
        for (Eigen::Index k = 0; k < d * d; ++k) {
            Vec e = Vec::Zero(d * d);
            e(k) = 1.0;
            const Mat x = unvec(e, d, d);
            Mat y = Mat::Zero(d, d);
            if (tag_ == OpTag::Conjugation)
                for (const auto& a : gens_) y += a * x * a.transpose();
            else
                y = gens_[0] * x + x * gens_[0].transpose();
            const double scale = std::max(1.0, rep_.cwiseAbs().maxCoeff());
            if ((vec(y) - rep_.col(k)).cwiseAbs().maxCoeff() > tol * scale)
                throw std::logic_error("LinOpNM: representation disagrees with structural tag");
        }
    }

private:
    void check_same_space(const LinOpNM& o) const {
        if (o.n_ != n_ || o.m_ != m_) throw DimensionError("LinOpNM: operators act on different spaces");
    }

    Eigen::Index n_ = 0, m_ = 0;
    Mat rep_;
    OpTag tag_ = OpTag::General;
    std::vector<Mat> gens_;
};

}  // namespace mcarma
