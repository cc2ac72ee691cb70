#pragma once

#include "mcarma/cones.hpp"
#include "mcarma/levy.hpp"
#include "mcarma/linop.hpp"
#include "mcarma/matops.hpp"

#include <optional>
#include <vector>

namespace mcarma {

/// Controller canonical form in two vectorizations.
///
/// The plain companion acts on (vec Z^1, ..., vec Z^p) with identity super-diagonal blocks and is what every
/// moment, kernel and simulation routine uses. The hatted form uses K^{-1} super-diagonal blocks and
/// coefficient blocks A_i^vec K^{-1}; it coincides with the plain one whenever K acts trivially
/// (m = 1, n = 1, or symmetric states under symmetry-preserving operators).
struct CompanionForm {
    Eigen::Index n = 1, m = 1, p = 1, q = 0;
    Mat Avec_hat, Cvec_hat, Evec_hat;
    Mat Avec, Cvec, Evec;

    Eigen::Index block() const { return n * m; }
    Eigen::Index state_dim() const { return p * n * m; }
};

enum class StabilityKind { Causal, NonCausalStationary, NonStationary };

inline const char* to_string(StabilityKind k) {
    switch (k) {
        case StabilityKind::Causal: return "Causal";
        case StabilityKind::NonCausalStationary: return "NonCausalStationary";
        case StabilityKind::NonStationary: return "NonStationary";
    }
    return "NonStationary";
}

struct Classification {
    StabilityKind kind = StabilityKind::NonStationary;
    double tau = 0.0;
    double imag_axis_margin = 0.0;  ///< min |Re lambda| over the spectrum
    CVec eigenvalues;
};

class MCARMAModel {
public:
    MCARMAModel(std::vector<LinOpNM> A_ops, std::vector<LinOpNM> C_ops, LevySpec levy,
                std::optional<ConeSpec> cone = std::nullopt)
        : A_(std::move(A_ops)), C_(std::move(C_ops)), levy_(std::move(levy)), cone_(cone) {
        if (A_.empty()) throw std::invalid_argument("MCARMAModel: p must be >= 1");
        if (C_.empty()) throw std::invalid_argument("MCARMAModel: need C_0");
        if (C_.size() > A_.size()) throw std::invalid_argument("MCARMAModel: q must be smaller than p");
        n_ = A_.front().n();
        m_ = A_.front().m();
        for (const auto& op : A_)
            if (op.n() != n_ || op.m() != m_) throw DimensionError("MCARMAModel: A operators act on different spaces");
        for (const auto& op : C_)
            if (op.n() != n_ || op.m() != m_) throw DimensionError("MCARMAModel: C operators act on different spaces");
        if (levy_.n != n_ || levy_.m != m_) throw DimensionError("MCARMAModel: noise dimensions differ from the model");
        levy_.validate();
        if (cone_) {
            const bool ok = cone_->copies == 1 &&
                            (cone_->is_psd() ? (n_ == cone_->d && m_ == cone_->d) : n_ * m_ == cone_->d);
            if (!ok) throw DimensionError("MCARMAModel: cone " + cone_->name() + " does not match the state space");
        }
        build();
    }

    Eigen::Index n() const { return n_; }
    Eigen::Index m() const { return m_; }
    Eigen::Index dim() const { return n_ * m_; }
    Eigen::Index p() const { return static_cast<Eigen::Index>(A_.size()); }
    Eigen::Index q() const { return static_cast<Eigen::Index>(C_.size()) - 1; }
    Eigen::Index state_dim() const { return p() * dim(); }

    /// A_ops()[i] is A_{i+1}; C_ops()[j] is C_j.
    const std::vector<LinOpNM>& A_ops() const { return A_; }
    const std::vector<LinOpNM>& C_ops() const { return C_; }
    const LevySpec& levy() const { return levy_; }
    const std::optional<ConeSpec>& cone() const { return cone_; }
    const CompanionForm& companion() const { return form_; }
    const Classification& classification() const { return cls_; }
    bool causal() const { return cls_.kind == StabilityKind::Causal; }

    MCARMAModel with_levy(LevySpec l) const { return MCARMAModel(A_, C_, std::move(l), cone_); }
    MCARMAModel with_cone(std::optional<ConeSpec> c) const { return MCARMAModel(A_, C_, levy_, c); }

private:
    void build();

    std::vector<LinOpNM> A_, C_;
    LevySpec levy_;
    std::optional<ConeSpec> cone_;
    Eigen::Index n_ = 1, m_ = 1;
    CompanionForm form_;
    Classification cls_;
};

inline constexpr double kImagAxisMargin = 1e-9;

inline Classification classify_matrix(const Mat& A) {
    Classification c;
    c.eigenvalues = eigenvalues(A);
    c.tau = -std::numeric_limits<double>::infinity();
    c.imag_axis_margin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < c.eigenvalues.size(); ++i) {
        const double re = c.eigenvalues(i).real();
        c.tau = std::max(c.tau, re);
        c.imag_axis_margin = std::min(c.imag_axis_margin, std::abs(re));
    }
    if (c.imag_axis_margin < kImagAxisMargin)
        c.kind = StabilityKind::NonStationary;
    else if (c.tau < 0.0)
        c.kind = StabilityKind::Causal;
    else
        c.kind = StabilityKind::NonCausalStationary;
    return c;
}

inline CompanionForm build_companion(const std::vector<LinOpNM>& A, const std::vector<LinOpNM>& C) {
    CompanionForm f;
    f.n = A.front().n();
    f.m = A.front().m();
    f.p = static_cast<Eigen::Index>(A.size());
    f.q = static_cast<Eigen::Index>(C.size()) - 1;
    const Eigen::Index d = f.n * f.m, p = f.p;
    const Mat I = Mat::Identity(d, d);
    const Mat Kinv = commutation_matrix(f.n, f.m).transpose();
    f.Avec = Mat::Zero(p * d, p * d);
    f.Avec_hat = Mat::Zero(p * d, p * d);
    for (Eigen::Index i = 0; i + 1 < p; ++i) {
        f.Avec.block(i * d, (i + 1) * d, d, d) = I;
        f.Avec_hat.block(i * d, (i + 1) * d, d, d) = Kinv;
    }
    for (Eigen::Index j = 0; j < p; ++j) {
        const Mat& a = A[static_cast<std::size_t>(p - 1 - j)].rep();
        f.Avec.block((p - 1) * d, j * d, d, d) = a;
        f.Avec_hat.block((p - 1) * d, j * d, d, d) = a * Kinv;
    }
    f.Cvec = Mat::Zero(d, p * d);
    f.Cvec_hat = Mat::Zero(d, p * d);
    for (Eigen::Index j = 0; j <= f.q; ++j) {
        f.Cvec.block(0, j * d, d, d) = C[static_cast<std::size_t>(j)].rep();
        f.Cvec_hat.block(0, j * d, d, d) = C[static_cast<std::size_t>(j)].rep() * Kinv;
    }
    f.Evec = Mat::Zero(p * d, d);
    f.Evec_hat = Mat::Zero(p * d, d);
    f.Evec.bottomRows(d) = I;
    f.Evec_hat.bottomRows(d) = Kinv;
    return f;
}

inline CompanionForm build_companion(const MCARMAModel& model) { return model.companion(); }

inline void MCARMAModel::build() {
    form_ = build_companion(A_, C_);
    cls_ = classify_matrix(form_.Avec);
}

inline Classification classify(const MCARMAModel& model) { return model.classification(); }

/// C_hat (lambda I - A_hat)^{-1} E_hat
inline CMat transfer_function(const MCARMAModel& model, cplx lambda) {
    const auto& f = model.companion();
    CMat R = -f.Avec_hat.cast<cplx>();
    R.diagonal().array() += lambda;
    Eigen::PartialPivLU<CMat> lu(R);
    if (std::abs(lu.determinant()) < 1e-300 || !std::isfinite(std::abs(lu.determinant())))
        throw SingularEquationError("transfer_function: lambda is an eigenvalue of the companion matrix");
    return f.Cvec_hat.cast<cplx>() * lu.solve(f.Evec_hat.cast<cplx>());
}

namespace detail {
inline CMat right_divide(const CMat& Q, const CMat& P, const char* what) {
    Eigen::PartialPivLU<CMat> lu(P);
    const double rc = lu.rcond();
    if (!(rc > 1e-14) || !std::isfinite(rc)) throw SingularEquationError(std::string(what) + " is singular");
    return Q * lu.inverse();
}
}  // namespace detail

/// Numerator and denominator of the right matrix fraction in powers of K lambda.
///
/// P_hat(lambda) = (K lambda)^p - sum_j K A_j K^{-1} (K lambda)^{p-j}, Q_hat(lambda) = sum_j C_j K^{-1} (K lambda)^j.
inline std::pair<CMat, CMat> rmfd_polynomials(const MCARMAModel& model, cplx lambda) {
    const Eigen::Index d = model.dim(), p = model.p();
    const CMat K = commutation_matrix(model.n(), model.m()).cast<cplx>();
    const CMat Kinv = K.transpose();
    const CMat KL = lambda * K;
    std::vector<CMat> pw{CMat::Identity(d, d)};
    for (Eigen::Index k = 1; k <= p; ++k) pw.push_back(pw.back() * KL);
    CMat P = pw[static_cast<std::size_t>(p)];
    for (Eigen::Index j = 1; j <= p; ++j)
        P -= K * model.A_ops()[static_cast<std::size_t>(j - 1)].rep().cast<cplx>() * Kinv * pw[static_cast<std::size_t>(p - j)];
    CMat Q = CMat::Zero(d, d);
    for (Eigen::Index j = 0; j <= model.q(); ++j)
        Q += model.C_ops()[static_cast<std::size_t>(j)].rep().cast<cplx>() * Kinv * pw[static_cast<std::size_t>(j)];
    return {Q, P};
}

inline CMat rmfd_eval(const MCARMAModel& model, cplx lambda) {
    auto [Q, P] = rmfd_polynomials(model, lambda);
    return detail::right_divide(Q, P, "rmfd_eval: P_hat(lambda)");
}

/// Operator polynomials P(lambda) = lambda^p I - sum A_j lambda^{p-j}, Q(lambda) = sum C_j lambda^j (vec reps).
inline std::pair<CMat, CMat> operator_polynomials(const MCARMAModel& model, cplx lambda) {
    const Eigen::Index d = model.dim(), p = model.p();
    std::vector<cplx> pw(static_cast<std::size_t>(std::max(p, model.q()) + 1), cplx(1.0, 0.0));
    for (std::size_t k = 1; k < pw.size(); ++k) pw[k] = pw[k - 1] * lambda;
    CMat P = pw[static_cast<std::size_t>(p)] * CMat::Identity(d, d);
    for (Eigen::Index j = 1; j <= p; ++j)
        P -= pw[static_cast<std::size_t>(p - j)] * model.A_ops()[static_cast<std::size_t>(j - 1)].rep().cast<cplx>();
    CMat Q = CMat::Zero(d, d);
    for (Eigen::Index j = 0; j <= model.q(); ++j)
        Q += pw[static_cast<std::size_t>(j)] * model.C_ops()[static_cast<std::size_t>(j)].rep().cast<cplx>();
    return {Q, P};
}

/// Laplace transform of the kernel, Q(lambda) P(lambda)^{-1}.
inline CMat laplace_symbol(const MCARMAModel& model, cplx lambda) {
    auto [Q, P] = operator_polynomials(model, lambda);
    return detail::right_divide(Q, P, "laplace_symbol: P(lambda)");
}

/// Real-argument version returning a real matrix.
inline Mat laplace_symbol(const MCARMAModel& model, double lambda) { return laplace_symbol(model, cplx(lambda, 0.0)).real(); }

/// g(s) = C e^{sA} E as an operator on n x m matrices.
inline LinOpNM kernel(const MCARMAModel& model, double s) {
    if (s < 0.0) throw std::invalid_argument("kernel: s must be nonnegative");
    const auto& f = model.companion();
    return LinOpNM::general(model.n(), model.m(), f.Cvec * expm(s * f.Avec) * f.Evec);
}

/// Stable/unstable spectral splitting of the plain companion.
struct SpectralSplit {
    Mat A, C, E;
    Mat P_stable, P_unstable;
    double margin = 0.0;  ///< min |Re lambda|

    /// Generators restricted to each invariant subspace; e^{tA} P = e^{tAP} P keeps growth modes out.
    Mat A_stable() const { return A * P_stable; }
    Mat A_unstable() const { return A * P_unstable; }

    /// C e^{tA} P_- E: decays as t -> +infinity
    Mat g1(double t) const { return C * expm(t * A_stable()) * P_stable * E; }
    /// C e^{tA} P_+ E: decays as t -> -infinity
    Mat g2(double t) const { return C * expm(t * A_unstable()) * P_unstable * E; }
    /// Stationary two-sided kernel: g1 on t >= 0, -g2 on t < 0.
    Mat h(double t) const { return t >= 0.0 ? g1(t) : Mat(-g2(t)); }
};

inline SpectralSplit spectral_split(const CompanionForm& form) {
    const Classification c = classify_matrix(form.Avec);
    if (c.kind == StabilityKind::NonStationary)
        throw SingularEquationError("spectral_split: eigenvalue on the imaginary axis");
    SpectralSplit s;
    s.A = form.Avec;
    s.C = form.Cvec;
    s.E = form.Evec;
    s.margin = c.imag_axis_margin;
    const Eigen::Index N = form.Avec.rows();
    const Mat I = Mat::Identity(N, N);
    if (c.tau < 0.0) {
        s.P_stable = I;
        s.P_unstable = Mat::Zero(N, N);
    } else {
        const Mat S = matrix_sign(form.Avec);
        s.P_stable = 0.5 * (I - S);
        s.P_unstable = 0.5 * (I + S);
    }
    return s;
}

inline SpectralSplit spectral_split(const MCARMAModel& model) { return spectral_split(model.companion()); }

}  // namespace mcarma
