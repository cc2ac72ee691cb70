#pragma once

// Independent reference computations used only by the tests. None of these call the library's
// expm / sylvester / quadrature code paths.

#include <Eigen/Dense>
#include <unsupported/Eigen/Polynomials>

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;

/// Taylor series with scaling and squaring.
inline Mat expm_taylor(const Mat& A) {
    const double nrm = A.cwiseAbs().rowwise().sum().maxCoeff();
    int s = 0;
    while (std::ldexp(nrm, -s) > 0.25) ++s;
    const Mat B = std::ldexp(1.0, -s) * A;
    Mat term = Mat::Identity(A.rows(), A.cols());
    Mat sum = term;
    for (int k = 1; k <= 30; ++k) {
        term = term * B / static_cast<double>(k);
        sum += term;
    }
    for (int i = 0; i < s; ++i) sum = sum * sum;
    return sum;
}

inline Mat kron(const Mat& A, const Mat& B) {
    Mat K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j) K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

inline Vec vec(const Mat& X) { return Eigen::Map<const Vec>(X.data(), X.size()); }
inline Mat unvec(const Vec& v, Eigen::Index r, Eigen::Index c) { return Eigen::Map<const Mat>(v.data(), r, c); }

/// Solve A X + X B = C through the Kronecker-sum linear system.
inline Mat sylvester_kron(const Mat& A, const Mat& B, const Mat& C) {
    const Eigen::Index n = A.rows(), m = B.rows();
    const Mat M = kron(Mat::Identity(m, m), A) + kron(B.transpose(), Mat::Identity(n, n));
    return unvec(M.fullPivLu().solve(vec(C)), n, m);
}

/// Commutation matrix from its defining permutation, entry by entry.
inline Mat commutation(Eigen::Index n, Eigen::Index m) {
    Mat K = Mat::Zero(n * m, n * m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
            Mat E = Mat::Zero(n, m);
            E(i, j) = 1.0;
            K += kron(E, E.transpose());
        }
    return K;
}

/// Composite 8-point Gauss-Legendre on [a, b] with `panels` equal panels.
inline Mat gauss_legendre(const std::function<Mat(double)>& f, double a, double b, int panels) {
    static const double x[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
                                0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
    static const double w[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
                                0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
    const double h = (b - a) / panels;
    Mat acc;
    for (int p = 0; p < panels; ++p) {
        const double c = a + (p + 0.5) * h;
        for (int k = 0; k < 8; ++k) {
            const Mat v = f(c + 0.5 * h * x[k]) * (0.5 * h * w[k]);
            if (acc.size() == 0)
                acc = v;
            else
                acc += v;
        }
    }
    return acc;
}

/// Nested product rule for int_0^t int_0^s f(u) du ds = int_0^t (t - u) f(u) du.
inline Mat double_integral(const std::function<Mat(double)>& f, double t, int panels) {
    return gauss_legendre([&](double u) { return Mat((t - u) * f(u)); }, 0.0, t, panels);
}

/// Coefficients (ascending) of det M(lambda) for a matrix polynomial of known degree, by interpolation on a circle.
inline Eigen::VectorXcd det_poly_coeffs(const std::function<CMat(cplx)>& M, int degree, double radius) {
    const int N = degree + 1;
    Eigen::VectorXcd vals(N);
    for (int k = 0; k < N; ++k) {
        const cplx z = std::polar(radius, 2.0 * M_PI * k / N);
        vals(k) = M(z).determinant();
    }
    Eigen::VectorXcd c(N);
    for (int j = 0; j < N; ++j) {
        cplx s = 0.0;
        for (int k = 0; k < N; ++k) s += vals(k) * std::polar(1.0, -2.0 * M_PI * j * k / N);
        c(j) = s / static_cast<double>(N) / std::pow(radius, j);
    }
    return c;
}

/// Roots of a real polynomial with ascending coefficients.
inline std::vector<cplx> poly_roots(const Vec& coeffs) {
    Eigen::PolynomialSolver<double, Eigen::Dynamic> solver;
    solver.compute(coeffs);
    std::vector<cplx> out;
    for (Eigen::Index i = 0; i < solver.roots().size(); ++i) out.push_back(solver.roots()(i));
    return out;
}

/// Greedy matching distance between two multisets of complex numbers.
inline double multiset_distance(std::vector<cplx> a, std::vector<cplx> b) {
    if (a.size() != b.size()) return INFINITY;
    double worst = 0.0;
    for (const auto& x : a) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < b.size(); ++j)
            if (std::abs(b[j] - x) < std::abs(b[best] - x)) best = j;
        worst = std::max(worst, std::abs(b[best] - x));
        b.erase(b.begin() + static_cast<long>(best));
    }
    return worst;
}

inline Mat random_matrix(std::mt19937_64& g, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    std::normal_distribution<double> N(0.0, scale);
    Mat X(r, c);
    for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = N(g);
    return X;
}

/// Random matrix shifted so every eigenvalue has real part <= -margin.
inline Mat random_stable(std::mt19937_64& g, Eigen::Index d, double margin = 0.3) {
    Mat X = random_matrix(g, d, d, 0.6);
    const double tau = Eigen::EigenSolver<Mat>(X).eigenvalues().real().maxCoeff();
    X.diagonal().array() -= tau + margin;
    return X;
}

inline double mean(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline double std_error(const std::vector<double>& x) {
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
}

}  // namespace oracle
