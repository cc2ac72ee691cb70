#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace mcarma {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using cplx = std::complex<double>;

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SingularEquationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Column-stacking vectorization.
inline Vec vec(const Mat& x) {
    return Eigen::Map<const Vec>(x.data(), x.size());
}

inline Mat unvec(const Vec& v, Eigen::Index n, Eigen::Index m) {
    if (n < 1 || m < 1 || v.size() != n * m)
        throw DimensionError("unvec: vector of length " + std::to_string(v.size()) +
                             " cannot be reshaped to " + std::to_string(n) + "x" + std::to_string(m));
    return Eigen::Map<const Mat>(v.data(), n, m);
}

/// Lower-triangular half-vectorization of a square matrix.
inline Vec vech(const Mat& x) {
    if (x.rows() != x.cols()) throw DimensionError("vech: matrix is not square");
    const Eigen::Index d = x.rows();
    Vec out(d * (d + 1) / 2);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = j; i < d; ++i) out(k++) = x(i, j);
    return out;
}

inline Mat unvech(const Vec& v) {
    const auto d = static_cast<Eigen::Index>(std::llround((std::sqrt(8.0 * v.size() + 1.0) - 1.0) / 2.0));
    if (d * (d + 1) / 2 != v.size()) throw DimensionError("unvech: length is not triangular");
    Mat out(d, d);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = j; i < d; ++i) {
            out(i, j) = v(k);
            out(j, i) = v(k);
            ++k;
        }
    return out;
}

/// K^{(n,m)} with K vec(A) = vec(A^T) for A of shape n x m.
inline Mat commutation_matrix(Eigen::Index n, Eigen::Index m) {
    if (n < 1 || m < 1) throw DimensionError("commutation_matrix: dimensions must be positive");
    Mat K = Mat::Zero(n * m, n * m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) K(i * m + j, j * n + i) = 1.0;
    return K;
}

template <class DA, class DB>
auto kron(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& B) {
    using Scalar = typename DA::Scalar;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return out;
}

inline Mat hadamard(const Mat& A, const Mat& B) {
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw DimensionError("hadamard: shape mismatch");
    return A.cwiseProduct(B);
}

inline void require_square(const Mat& A, const char* who) {
    if (A.rows() != A.cols()) throw DimensionError(std::string(who) + ": matrix is not square");
}

/// Matrix exponential (scaling and squaring with a degree-13 Pade approximant).
inline Mat expm(const Mat& A) {
    require_square(A, "expm");
    if (A.size() == 0) return A;
    if (!A.allFinite()) throw std::domain_error("expm: non-finite input");
    return A.exp();
}

/// phi1(A) = \int_0^1 e^{sA} ds, read off the exponential of a bordered block matrix.
inline Mat phi1(const Mat& A) {
    require_square(A, "phi1");
    const Eigen::Index n = A.rows();
    Mat M = Mat::Zero(2 * n, 2 * n);
    M.topLeftCorner(n, n) = A;
    M.topRightCorner(n, n).setIdentity();
    return expm(M).topRightCorner(n, n);
}

/// Van Loan: \int_0^t e^{sA} B e^{sA^T} ds via expm of [[A, B],[0, -A^T]].
inline Mat convolution_gramian(const Mat& A, const Mat& B, double t) {
    require_square(A, "convolution_gramian");
    const Eigen::Index n = A.rows();
    Mat M = Mat::Zero(2 * n, 2 * n);
    M.topLeftCorner(n, n) = -A;
    M.topRightCorner(n, n) = B;
    M.bottomRightCorner(n, n) = A.transpose();
    const Mat E = expm(t * M);
    const Mat F = E.bottomRightCorner(n, n).transpose();
    Mat G = F * E.topRightCorner(n, n);
    return 0.5 * (G + G.transpose());
}

inline CVec eigenvalues(const Mat& A) {
    require_square(A, "eigenvalues");
    if (A.size() == 0) return CVec();
    Eigen::EigenSolver<Mat> es(A, false);
    if (es.info() != Eigen::Success) throw NonConvergenceError("eigenvalues: real Schur iteration did not converge");
    return es.eigenvalues();
}

inline double spectral_bound(const Mat& A) {
    const CVec ev = eigenvalues(A);
    if (ev.size() == 0) throw DimensionError("spectral_bound: empty matrix");
    double tau = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ev.size(); ++i) tau = std::max(tau, ev(i).real());
    return tau;
}

/// Solve AX + XB = C by Bartels-Stewart on complex Schur forms.
inline Mat sylvester_solve(const Mat& A, const Mat& B, const Mat& C) {
    require_square(A, "sylvester_solve");
    require_square(B, "sylvester_solve");
    if (C.rows() != A.rows() || C.cols() != B.rows()) throw DimensionError("sylvester_solve: C has wrong shape");
    const Eigen::Index n = A.rows(), m = B.rows();
    Eigen::ComplexSchur<Mat> sa(A), sb(B);
    if (sa.info() != Eigen::Success || sb.info() != Eigen::Success)
        throw NonConvergenceError("sylvester_solve: Schur decomposition did not converge");
    const CMat& T = sa.matrixT();
    const CMat& S = sb.matrixT();
    const CMat& U = sa.matrixU();
    const CMat& V = sb.matrixU();
    const CMat F = U.adjoint() * C.cast<cplx>() * V;
    const double scale = std::max({1.0, A.norm(), B.norm()});
    CMat Y(n, m);
    for (Eigen::Index k = 0; k < m; ++k) {
        CVec rhs = F.col(k);
        for (Eigen::Index j = 0; j < k; ++j) rhs -= S(j, k) * Y.col(j);
        CMat L = T;
        L.diagonal().array() += S(k, k);
        for (Eigen::Index i = 0; i < n; ++i)
            if (std::abs(L(i, i)) <= 1e-13 * scale)
                throw SingularEquationError("sylvester_solve: spectra of A and -B overlap");
        Y.col(k) = L.triangularView<Eigen::Upper>().solve(rhs);
    }
    return (U * Y * V.adjoint()).real();
}

/// Matrix sign function by scaled Newton iteration; requires no eigenvalue on the imaginary axis.
inline Mat matrix_sign(const Mat& A, double axis_margin = 1e-9) {
    require_square(A, "matrix_sign");
    const CVec ev = eigenvalues(A);
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (std::abs(ev(i).real()) < axis_margin)
            throw SingularEquationError("matrix_sign: eigenvalue on the imaginary axis");
    const Eigen::Index n = A.rows();
    Mat S = A;
    for (int it = 0; it < 100; ++it) {
        Eigen::PartialPivLU<Mat> lu(S);
        const Mat Si = lu.inverse();
        const double det = std::abs(lu.determinant());
        double mu = (det > 0 && std::isfinite(det)) ? std::pow(det, -1.0 / static_cast<double>(n)) : 1.0;
        if (it > 6) mu = 1.0;
        const Mat next = 0.5 * (mu * S + Si / mu);
        const double delta = (next - S).norm();
        S = next;
        if (delta <= 1e-14 * std::max(1.0, S.norm())) break;
        if (it == 99) throw NonConvergenceError("matrix_sign: Newton iteration did not converge");
    }
    return S;
}

inline Mat symmetrize(const Mat& x) { return 0.5 * (x + x.transpose()); }

/// Frobenius inner product <a,b> = tr(a^T b).
inline double frob(const Mat& a, const Mat& b) { return (a.array() * b.array()).sum(); }

}  // namespace mcarma
