#pragma once

#include "mcarma/levy.hpp"
#include "mcarma/matops.hpp"
#include "mcarma/model.hpp"
#include "mcarma/quadrature.hpp"

#include "json.hpp"

#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace mcarma {

/// -C A^{-1} E mu_L, reshaped to n x m. Valid for any stationary model with invertible companion.
inline Mat stationary_mean(const MCARMAModel& model) {
    const auto& f = model.companion();
    Eigen::FullPivLU<Mat> lu(f.Avec);
    if (!lu.isInvertible()) throw SingularEquationError("stationary_mean: companion matrix is singular");
    const Vec mu = vec(mean_mu(model.levy()));
    return unvec(-f.Cvec * lu.solve(f.Evec * mu), model.n(), model.m());
}

/// Stationary state covariance: A S + S A^T = -E Q E^T.
inline Mat stationary_state_variance(const MCARMAModel& model) {
    if (!model.causal()) throw std::invalid_argument("stationary_variance: model is not causal (tau >= 0)");
    const auto& f = model.companion();
    const Mat Q = covariance_operator(model.levy()).rep();
    return symmetrize(sylvester_solve(f.Avec, f.Avec.transpose(), -f.Evec * Q * f.Evec.transpose()));
}

/// Var[vec X_t] = C S C^T
inline Mat stationary_variance(const MCARMAModel& model) {
    const auto& f = model.companion();
    return symmetrize(f.Cvec * stationary_state_variance(model) * f.Cvec.transpose());
}

/// Cov[vec X_{t+h}, vec X_t] = C e^{hA} S C^T
inline Mat autocovariance(const MCARMAModel& model, double h) {
    if (h < 0) throw std::invalid_argument("autocovariance: lag must be nonnegative");
    const auto& f = model.companion();
    return f.Cvec * expm(h * f.Avec) * stationary_state_variance(model) * f.Cvec.transpose();
}

/// C S_{t,s} C^T with S_{t,s} = int_0^{t-s} e^{uA} E Q E^T e^{uA^T} du (Van Loan block exponential).
inline Mat conditional_variance(const MCARMAModel& model, double s, double t) {
    if (!(s < t)) throw std::invalid_argument("conditional_variance: need s < t");
    const auto& f = model.companion();
    const Mat Q = covariance_operator(model.levy()).rep();
    const Mat S = convolution_gramian(f.Avec, f.Evec * Q * f.Evec.transpose(), t - s);
    return symmetrize(f.Cvec * S * f.Cvec.transpose());
}

/// E[X_t | Z_s = z] = C (e^{(t-s)A} z + (t-s) phi1((t-s)A) E mu_L)
inline Mat conditional_mean(const MCARMAModel& model, const Vec& z, double s, double t) {
    if (!(s <= t)) throw std::invalid_argument("conditional_mean: need s <= t");
    const auto& f = model.companion();
    const double h = t - s;
    const Vec mu = vec(mean_mu(model.levy()));
    return unvec(f.Cvec * (expm(h * f.Avec) * z + h * phi1(h * f.Avec) * f.Evec * mu), model.n(), model.m());
}

/// Cov[vec X_{t+h}, vec X_t] of the two-sided stationary solution of a model without imaginary-axis spectrum.
inline Mat autocovariance_split(const MCARMAModel& model, double h) {
    if (h < 0) throw std::invalid_argument("autocovariance_split: lag must be nonnegative");
    const SpectralSplit sp = spectral_split(model);
    const Mat Q = covariance_operator(model.levy()).rep();
    const Mat Gm = sp.A * sp.P_stable - sp.P_unstable;    // stable on range(P_stable), -1 elsewhere
    const Mat Gp = -sp.A * sp.P_unstable - sp.P_stable;
    const Mat Em = sp.P_stable * sp.E, Ep = sp.P_unstable * sp.E;
    const Mat Sm = sylvester_solve(Gm, Gm.transpose(), -Em * Q * Em.transpose());
    const Mat Sp = sylvester_solve(Gp, Gp.transpose(), -Ep * Q * Ep.transpose());
    const Eigen::Index N = Gm.rows();
    Mat blk = Mat::Zero(2 * N, 2 * N);
    blk.topLeftCorner(N, N) = Gm;
    blk.topRightCorner(N, N) = Em * Q * Ep.transpose();
    blk.bottomRightCorner(N, N) = Gp.transpose();
    const Mat cross = expm(h * blk).topRightCorner(N, N);
    const Mat Sz = expm(h * Gm) * Sm + Sp * expm(h * Gp.transpose()) - cross;
    return sp.C * Sz * sp.C.transpose();
}

/// OU stationary covariance D^{-1} Q: a S + S a^T = Q.
inline Mat ou_variance(const LinOpNM& A, const LinOpNM& Q) {
    const Mat& a = A.rep();
    if (!(spectral_bound(-a) < 0.0)) throw std::invalid_argument("ou: -A is not stable");
    return symmetrize(sylvester_solve(a, a.transpose(), Q.rep()));
}

/// e^{-hA} D^{-1} Q
inline Mat ou_acov(const LinOpNM& A, const LinOpNM& Q, double h) {
    if (h < 0) throw std::invalid_argument("ou_acov: lag must be nonnegative");
    return expm(-h * A.rep()) * ou_variance(A, Q);
}

inline Mat ou_mean(const LinOpNM& A, const Mat& mu) {
    return unvec(A.rep().fullPivLu().solve(vec(mu)), mu.rows(), mu.cols());
}

/// r++(t) = int_0^t int_0^s acov(u) du ds by nested adaptive quadrature.
inline Mat r_plus_plus(const std::function<Mat(double)>& acov, double t, const QuadratureOptions& opt = {}) {
    if (t < 0) throw std::invalid_argument("r_plus_plus: t must be nonnegative");
    if (t == 0.0) return acov(0.0) * 0.0;
    QuadratureOptions inner = opt;
    inner.abs_tol = opt.abs_tol / std::max(1.0, t) * 0.1;
    auto outer = [&](double s) -> Mat { return integrate(acov, 0.0, s, inner).value; };
    return integrate(outer, 0.0, t, opt).value;
}

/// OU closed form (a^{-2}(e^{-ta} - I) + a^{-1} t) D^{-1} Q
inline Mat r_pp_ou(const LinOpNM& A, const LinOpNM& Q, double t) {
    const Mat& a = A.rep();
    const Eigen::Index d = a.rows();
    const Eigen::PartialPivLU<Mat> lu(a);
    const Mat inner = lu.solve(expm(-t * a) - Mat::Identity(d, d)) + t * Mat::Identity(d, d);
    return lu.solve(inner) * ou_variance(A, Q);
}

/// T(h) = int_0^h e^{-(h-v)a} Q e^{-v a^T} dv: the future-past cross term of the well-balanced autocovariance.
inline Mat wb_correction(const LinOpNM& A, const LinOpNM& Q, double h) {
    const Mat& a = A.rep();
    const Eigen::Index d = a.rows();
    Mat M = Mat::Zero(2 * d, 2 * d);
    M.topLeftCorner(d, d) = -a;
    M.topRightCorner(d, d) = Q.rep();
    M.bottomRightCorner(d, d) = -a.transpose();
    return expm(h * M).topRightCorner(d, d);
}

/// Same term through h e^{-ha} phi1(h Dhat)(Q) with Dhat(X) = aX - Xa^T; Dhat is singular, phi1 handles it.
inline Mat wb_correction_phi1(const LinOpNM& A, const LinOpNM& Q, double h) {
    const Mat& a = A.rep();
    const Eigen::Index d = a.rows();
    const Mat I = Mat::Identity(d, d);
    const Mat Dhat = kron(I, a) - kron(a, I);
    return h * expm(-h * a) * unvec(phi1(h * Dhat) * vec(Q.rep()), d, d);
}

/// Well-balanced OU autocovariance e^{-ha} S + S e^{-ha^T} + T(h).
inline Mat wb_acov(const LinOpNM& A, const LinOpNM& Q, double h) {
    if (h < 0) throw std::invalid_argument("wb_acov: lag must be nonnegative");
    const Mat S = ou_variance(A, Q);
    const Mat E = expm(-h * A.rep()) * S;
    return E + E.transpose() + wb_correction(A, Q, h);
}

inline Mat wb_mean(const LinOpNM& A, const Mat& mu) { return 2.0 * ou_mean(A, mu); }

namespace detail {

/// int_0^t int_0^s T(u) du ds from the (1,4) block of a 4x4 block exponential.
inline Mat wb_T4(const Mat& a, const Mat& Q, double t) {
    const Eigen::Index d = a.rows();
    const Mat I = Mat::Identity(d, d);
    Mat M = Mat::Zero(4 * d, 4 * d);
    M.block(0, d, d, d) = I;
    M.block(d, 2 * d, d, d) = I;
    M.block(2 * d, 2 * d, d, d) = -a;
    M.block(2 * d, 3 * d, d, d) = Q;
    M.block(3 * d, 3 * d, d, d) = -a.transpose();
    return expm(t * M).block(0, 3 * d, d, d);
}

}  // namespace detail

/// Well-balanced r++: R(t) + R(t)^T + int int T with R the OU closed form.
inline Mat r_pp_wb(const LinOpNM& A, const LinOpNM& Q, double t) {
    const Mat R = r_pp_ou(A, Q, t);
    return R + R.transpose() + detail::wb_T4(A.rep(), Q.rep(), t);
}

/// r++(h D + D) - 2 r++(h D) + r++(h D - D)
inline Mat acov_realized(const std::function<Mat(double)>& r_pp, double Delta, int h) {
    if (h < 1) throw std::invalid_argument("acov_realized: lag must be >= 1");
    if (!(Delta > 0)) throw std::invalid_argument("acov_realized: Delta must be positive");
    return r_pp(h * Delta + Delta) - 2.0 * r_pp(h * Delta) + r_pp(h * Delta - Delta);
}

namespace detail {
inline Mat sqret_factor(const Mat& a, double Delta) {
    const Eigen::Index d = a.rows();
    const Mat B = Mat::Identity(d, d) - expm(-Delta * a);
    const Eigen::PartialPivLU<Mat> lu(a);
    return lu.solve(lu.solve(B * B));
}
}  // namespace detail

/// e^{-a D (h-1)} a^{-2} (I - e^{-a D})^2 D^{-1} Q
inline Mat acov_sqret_ou(const LinOpNM& A, const LinOpNM& Q, double Delta, int h) {
    if (h < 1) throw std::invalid_argument("acov_sqret_ou: lag must be >= 1");
    const Mat& a = A.rep();
    return expm(-a * Delta * (h - 1)) * detail::sqret_factor(a, Delta) * ou_variance(A, Q);
}

/// Well-balanced squared-return autocovariance without inverting Dhat.
inline Mat acov_sqret_wb(const LinOpNM& A, const LinOpNM& Q, double Delta, int h) {
    if (h < 1) throw std::invalid_argument("acov_sqret_wb: lag must be >= 1");
    const Mat& a = A.rep();
    const double w = (h - 1) * Delta;
    const Mat fac = detail::sqret_factor(a, Delta);
    const Mat ew = expm(-w * a);
    const Mat P = ew * fac * ou_variance(A, Q);
    const Mat S2 = detail::wb_T4(a, Q.rep(), 2.0 * Delta) - 2.0 * detail::wb_T4(a, Q.rep(), Delta);
    return P + P.transpose() + fac * wb_correction(A, Q, w) + S2 * ew.transpose();
}

/// Leading small-time behaviour of the cross term: w e^{-wa} Q for w = D (h-1).
inline Mat wb_small_time_leading(const LinOpNM& A, const LinOpNM& Q, double w) { return w * expm(-w * A.rep()) * Q.rep(); }

/// Causal MCARMA r++: C (A^{-2}(e^{tA} - I) - A^{-1} t) S C^T.
inline Mat r_pp_causal(const MCARMAModel& model, double t) {
    const auto& f = model.companion();
    const Eigen::Index N = f.Avec.rows();
    const Eigen::PartialPivLU<Mat> lu(f.Avec);
    const Mat inner = lu.solve(expm(t * f.Avec) - Mat::Identity(N, N)) - t * Mat::Identity(N, N);
    return f.Cvec * lu.solve(inner) * stationary_state_variance(model) * f.Cvec.transpose();
}

/// C e^{(h-1)D A} A^{-2}(e^{DA} - I)^2 S C^T
inline Mat acov_sqret_causal(const MCARMAModel& model, double Delta, int h) {
    if (h < 1) throw std::invalid_argument("acov_sqret_causal: lag must be >= 1");
    const auto& f = model.companion();
    const Mat B = expm(Delta * f.Avec) - Mat::Identity(f.Avec.rows(), f.Avec.cols());
    const Eigen::PartialPivLU<Mat> lu(f.Avec);
    return f.Cvec * expm((h - 1) * Delta * f.Avec) * lu.solve(lu.solve(B * B)) * stationary_state_variance(model) *
           f.Cvec.transpose();
}

struct MomentReport {
    Mat mean;
    Mat var0;
    std::vector<std::pair<double, Mat>> acov;
    std::string method = "closed_form";
    std::optional<Mat> mean_se;
    std::vector<Mat> acov_se;
};

inline nlohmann::json to_json(const MomentReport& r) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["method"] = r.method;
    j["mean"] = mat_to_json(r.mean);
    j["var0"] = mat_to_json(r.var0);
    nlohmann::json lags = nlohmann::json::array();
    for (std::size_t i = 0; i < r.acov.size(); ++i) {
        nlohmann::json e{{"lag", r.acov[i].first}, {"acov", mat_to_json(r.acov[i].second)}};
        if (i < r.acov_se.size()) e["se"] = mat_to_json(r.acov_se[i]);
        lags.push_back(e);
    }
    j["acov"] = lags;
    if (r.mean_se) j["mean_se"] = mat_to_json(*r.mean_se);
    return j;
}

/// One row per lag: lag, then the column-major entries of the nm x nm autocovariance.
inline std::string to_csv(const MomentReport& r) {
    std::ostringstream os;
    os.precision(17);
    const Eigen::Index d = r.var0.rows();
    os << "lag";
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < d; ++i) os << ",c_" << i + 1 << "_" << j + 1;
    os << "\n";
    for (const auto& [h, M] : r.acov) {
        os << h;
        for (Eigen::Index j = 0; j < d; ++j)
            for (Eigen::Index i = 0; i < d; ++i) os << "," << M(i, j);
        os << "\n";
    }
    return os.str();
}

}  // namespace mcarma
