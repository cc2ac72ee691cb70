#pragma once

#include "mcarma/moments.hpp"
#include "mcarma/parallel.hpp"
#include "mcarma/paths.hpp"
#include "mcarma/simulate.hpp"
#include "mcarma/stats.hpp"

#include "json.hpp"

#include <cmath>
#include <optional>

namespace mcarma {

enum class CovKind { OU, WellBalanced, MCARMA };

inline const char* to_string(CovKind k) {
    switch (k) {
        case CovKind::OU: return "ou";
        case CovKind::WellBalanced: return "wellbalanced";
        case CovKind::MCARMA: return "mcarma";
    }
    return "ou";
}

/// Log-price dY = (alpha + X beta) dt + X^{1/2} dW with a d x d covariance process X.
struct StochCovModel {
    int d = 1;
    Vec alpha;
    Vec beta;
    CovKind kind = CovKind::OU;
    std::optional<LinOpNM> A;              ///< OU / well-balanced mean-reversion operator (dX = -A X dt + dL)
    std::optional<LevySpec> levy;          ///< OU / well-balanced driving noise
    std::optional<MCARMAModel> mcarma;     ///< general causal covariance model
    double Delta = 1.0;
    double Delta_sim = 1.0 / 64.0;

    int substeps() const {
        const double r = Delta / Delta_sim;
        const long k = std::lround(r);
        if (k < 1 || std::abs(r - static_cast<double>(k)) > 1e-9 * r)
            throw std::invalid_argument("StochCovModel: Delta must be an integer multiple of Delta_sim");
        return static_cast<int>(k);
    }

    void validate() const {
        if (d < 1) throw std::invalid_argument("StochCovModel: d must be >= 1");
        if (alpha.size() != d || beta.size() != d) throw DimensionError("StochCovModel: alpha and beta must have length d");
        if (!(Delta > 0 && Delta_sim > 0)) throw std::invalid_argument("StochCovModel: steps must be positive");
        substeps();
        if (kind == CovKind::MCARMA) {
            if (!mcarma) throw std::invalid_argument("StochCovModel: mcarma covariance process missing");
            if (mcarma->n() != d || mcarma->m() != d) throw DimensionError("StochCovModel: covariance process must be d x d");
        } else {
            if (!A || !levy) throw std::invalid_argument("StochCovModel: OU-type covariance needs A and levy");
            if (A->n() != d || A->m() != d || levy->n != d || levy->m != d)
                throw DimensionError("StochCovModel: covariance process must be d x d");
        }
    }

    /// The equivalent MCAR(1) for the OU case: A_1 = -A, C_0 = I.
    MCARMAModel ou_model() const {
        return MCARMAModel({A->scaled(-1.0)}, {LinOpNM::identity(d, d)}, *levy, ConeSpec::psd(d));
    }
};

struct PriceBundle {
    int d = 1;
    std::vector<double> grid;
    std::vector<Mat> Y;  ///< d x T per path
    std::size_t clamped = 0;
    std::size_t eigen_total = 0;

    double clamp_fraction() const { return eigen_total ? static_cast<double>(clamped) / static_cast<double>(eigen_total) : 0.0; }
};

namespace detail {

/// Symmetric square root with negative eigenvalues clamped to zero; returns the number clamped.
inline std::size_t psd_sqrt(const Mat& X, Mat& root, double tol) {
    const Eigen::Index d = X.rows();
    if (d == 1) {
        const double x = X(0, 0);
        if (x < -tol) throw std::domain_error("simulate_price: covariance path is not PSD");
        root.resize(1, 1);
        root(0, 0) = std::sqrt(std::max(x, 0.0));
        return x < 0.0 ? 1 : 0;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(X));
    const Vec ev = es.eigenvalues();
    if (ev.minCoeff() < -tol) throw std::domain_error("simulate_price: covariance path is not PSD");
    std::size_t c = 0;
    for (Eigen::Index i = 0; i < d; ++i) c += ev(i) < 0.0;
    root = es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    return c;
}

}  // namespace detail

/// Euler-Maruyama with explicit standard-normal increments dW (d x (T-1), already scaled by sqrt(dt)).
inline Mat simulate_price_with_increments(const Mat& X, const std::vector<double>& grid, const Mat& dW, const Vec& alpha,
                                          const Vec& beta, std::size_t* clamped = nullptr, std::size_t* total = nullptr) {
    const auto d = alpha.size();
    const auto T = static_cast<Eigen::Index>(grid.size());
    if (X.rows() != d * d || X.cols() != T) throw DimensionError("simulate_price: covariance path shape mismatch");
    if (dW.rows() != d || dW.cols() != T - 1) throw DimensionError("simulate_price: increment shape mismatch");
    const double scale = std::max(1.0, X.cwiseAbs().maxCoeff());
    Mat Y = Mat::Zero(d, T);
    Mat root;
    for (Eigen::Index k = 0; k + 1 < T; ++k) {
        const double dt = grid[static_cast<std::size_t>(k) + 1] - grid[static_cast<std::size_t>(k)];
        const Mat Xk = unvec(X.col(k), d, d);
        const std::size_t c = detail::psd_sqrt(Xk, root, 1e-8 * scale);
        if (clamped) *clamped += c;
        if (total) *total += static_cast<std::size_t>(d);
        Y.col(k + 1) = Y.col(k) + (alpha + Xk * beta) * dt + root * dW.col(k);
    }
    return Y;
}

/// One price path per covariance path; path i draws its Brownian increments from key.child(i).
inline PriceBundle simulate_price(const StochCovModel& model, const PathBundle& cov_paths, StreamKey key, unsigned threads = 1) {
    model.validate();
    PriceBundle out;
    out.d = model.d;
    out.grid = cov_paths.grid;
    out.Y.resize(cov_paths.paths());
    std::vector<std::size_t> cl(cov_paths.paths(), 0), tot(cov_paths.paths(), 0);
    parallel_for(cov_paths.paths(), threads, [&](std::size_t i) {
        RngStream rng(key.child(i));
        const auto T = static_cast<Eigen::Index>(cov_paths.grid.size());
        Mat dW(model.d, T - 1);
        for (Eigen::Index k = 0; k + 1 < T; ++k) {
            const double s = std::sqrt(cov_paths.grid[static_cast<std::size_t>(k) + 1] - cov_paths.grid[static_cast<std::size_t>(k)]);
            for (int r = 0; r < model.d; ++r) dW(r, k) = s * rng.normal();
        }
        out.Y[i] = simulate_price_with_increments(cov_paths.X[i], cov_paths.grid, dW, model.alpha, model.beta, &cl[i], &tot[i]);
    });
    for (std::size_t i = 0; i < cl.size(); ++i) {
        out.clamped += cl[i];
        out.eigen_total += tot[i];
    }
    return out;
}

/// Y_{n Delta} - Y_{(n-1) Delta} for every path, taking every `step`-th grid point.
inline std::vector<Mat> realized_returns(const std::vector<Mat>& Y, int step) {
    if (step < 1) throw std::invalid_argument("realized_returns: step must be >= 1");
    std::vector<Mat> out;
    for (const auto& y : Y) {
        const Eigen::Index N = (y.cols() - 1) / step;
        Mat r(y.rows(), N);
        for (Eigen::Index k = 0; k < N; ++k) r.col(k) = y.col((k + 1) * step) - y.col(k * step);
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<Mat> realized_returns(const PriceBundle& prices, double Delta) {
    const double dt = prices.grid.at(1) - prices.grid.at(0);
    const long step = std::lround(Delta / dt);
    if (step < 1 || std::abs(step * dt - Delta) > 1e-9 * Delta)
        throw std::invalid_argument("realized_returns: Delta is not a multiple of the price grid step");
    return realized_returns(prices.Y, static_cast<int>(step));
}

/// Columns vec(Y_n Y_n^T) for each return series.
inline std::vector<Mat> squared_returns(const std::vector<Mat>& returns) {
    std::vector<Mat> out;
    for (const auto& r : returns) {
        const Eigen::Index d = r.rows();
        Mat s(d * d, r.cols());
        for (Eigen::Index k = 0; k < r.cols(); ++k) s.col(k) = vec(r.col(k) * r.col(k).transpose());
        out.push_back(std::move(s));
    }
    return out;
}

/// Integrated covariance over each return window by the left Riemann sum the Euler scheme uses.
inline std::vector<Mat> integrated_covariance(const PathBundle& cov, int step) {
    std::vector<Mat> out;
    for (const auto& X : cov.X) {
        const Eigen::Index N = (X.cols() - 1) / step;
        Mat r = Mat::Zero(X.rows(), N);
        for (Eigen::Index n = 0; n < N; ++n)
            for (Eigen::Index k = n * step; k < (n + 1) * step; ++k)
                r.col(n) += (cov.grid[static_cast<std::size_t>(k) + 1] - cov.grid[static_cast<std::size_t>(k)]) * X.col(k);
        out.push_back(std::move(r));
    }
    return out;
}

namespace detail {
inline std::vector<Mat> as_batches(const std::vector<Mat>& series) {
    return series.size() >= 2 ? series : split_batches(series, 20);
}
}  // namespace detail

/// Empirical autocovariance of vec(Y_n Y_n^T) at lag h with batch-means standard errors.
inline Estimate squared_return_acov(const std::vector<Mat>& returns, int h) {
    if (h < 0) throw std::invalid_argument("squared_return_acov: lag must be nonnegative");
    std::size_t total = 0;
    for (const auto& r : returns) total += static_cast<std::size_t>(r.cols());
    if (total < 2u * (static_cast<std::size_t>(h) + 1u)) throw std::invalid_argument("squared_return_acov: insufficient data");
    for (const auto& r : returns)
        if (r.cols() <= h) throw std::invalid_argument("squared_return_acov: lag exceeds the series length");
    return estimate_acov(detail::as_batches(squared_returns(returns)), h);
}

struct StochvolTheory {
    Mat mean_X;                 ///< stationary E[X] (d x d)
    std::vector<Mat> acov;      ///< lag 1..H closed forms of acov of vec(Y Y^T)
};

inline StochvolTheory stochvol_theory(const StochCovModel& model, int H) {
    model.validate();
    StochvolTheory th;
    const double D = model.Delta;
    for (int h = 1; h <= H; ++h) {
        switch (model.kind) {
            case CovKind::OU: th.acov.push_back(acov_sqret_ou(*model.A, covariance_operator(*model.levy), D, h)); break;
            case CovKind::WellBalanced: th.acov.push_back(acov_sqret_wb(*model.A, covariance_operator(*model.levy), D, h)); break;
            case CovKind::MCARMA: th.acov.push_back(acov_sqret_causal(*model.mcarma, D, h)); break;
        }
    }
    switch (model.kind) {
        case CovKind::OU: th.mean_X = ou_mean(*model.A, mean_mu(*model.levy)); break;
        case CovKind::WellBalanced: th.mean_X = wb_mean(*model.A, mean_mu(*model.levy)); break;
        case CovKind::MCARMA: th.mean_X = stationary_mean(*model.mcarma); break;
    }
    return th;
}

/// Stationary covariance paths on the price grid.
inline PathBundle simulate_covariance(const StochCovModel& model, const std::vector<double>& grid, StreamKey key,
                                      std::size_t n_paths, unsigned threads = 1) {
    switch (model.kind) {
        case CovKind::OU: return simulate_stationary_causal(model.ou_model(), grid, key, n_paths, 1e-10, threads);
        case CovKind::WellBalanced:
            return simulate_wellbalanced_ou(*model.A, *model.levy, grid, key, n_paths, 1e-10, std::nullopt, threads);
        case CovKind::MCARMA: return simulate_stationary_causal(*model.mcarma, grid, key, n_paths, 1e-10, threads);
    }
    throw std::logic_error("unknown covariance kind");
}

struct StochvolReport {
    std::vector<Comparison> metrics;
    double clamp_fraction = 0.0;
    bool pass = true;
    std::vector<Mat> returns;  ///< d x N realized returns per path
    nlohmann::json extra;
};

inline nlohmann::json to_json(const StochvolReport& r) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["pass"] = r.pass;
    j["clamp_fraction"] = r.clamp_fraction;
    nlohmann::json ms = nlohmann::json::array();
    for (const auto& m : r.metrics) ms.push_back(to_json(m));
    j["metrics"] = ms;
    if (!r.extra.is_null()) j["extra"] = r.extra;
    return j;
}

/// Theory vs Monte Carlo for the return mean and squared-return autocovariances at lags 1..H.
inline StochvolReport compare_report(const StochCovModel& model, std::size_t n_paths, std::size_t returns_per_path,
                                     StreamKey key, int H = 3, unsigned threads = 1) {
    model.validate();
    if (model.beta.cwiseAbs().maxCoeff() != 0.0)
        throw std::invalid_argument("compare_report: closed-form squared-return moments need beta = 0");
    const int step = model.substeps();
    const std::size_t T = returns_per_path * static_cast<std::size_t>(step) + 1;
    std::vector<double> grid(T);
    for (std::size_t k = 0; k < T; ++k) grid[k] = static_cast<double>(k) * model.Delta_sim;
    const PathBundle cov = simulate_covariance(model, grid, key.child(1), n_paths, threads);
    const PriceBundle prices = simulate_price(model, cov, key.child(2), threads);
    StochvolReport rep;
    rep.returns = realized_returns(prices.Y, step);
    const auto& returns = rep.returns;
    const StochvolTheory th = stochvol_theory(model, H);

    rep.clamp_fraction = prices.clamp_fraction();
    const Mat mean_ret = model.alpha * model.Delta + model.Delta * th.mean_X * model.beta;
    rep.metrics.push_back(compare("return_mean", mean_ret, estimate_mean(detail::as_batches(returns))));
    const auto sq = squared_returns(returns);
    const Vec mean_sq = vec(model.Delta * th.mean_X) + vec(mean_ret * mean_ret.transpose());
    rep.metrics.push_back(compare("squared_return_mean", mean_sq, estimate_mean(detail::as_batches(sq))));
    for (int h = 1; h <= H; ++h)
        rep.metrics.push_back(compare("squared_return_acov_lag_" + std::to_string(h), th.acov[static_cast<std::size_t>(h - 1)],
                                      squared_return_acov(returns, h)));
    for (const auto& m : rep.metrics) rep.pass = rep.pass && m.max_abs_z < 4.0;
    rep.pass = rep.pass && rep.clamp_fraction < 1e-6;
    return rep;
}

/// acov(2)/acov(1) of the trace of the squared-return autocovariance.
inline double lag_decay_ratio(const std::vector<Mat>& acov) {
    if (acov.size() < 2) throw std::invalid_argument("lag_decay_ratio: need lags 1 and 2");
    return acov[1].trace() / acov[0].trace();
}

}  // namespace mcarma
