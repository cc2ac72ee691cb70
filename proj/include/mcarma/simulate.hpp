#pragma once

#include "mcarma/cones.hpp"
#include "mcarma/levy.hpp"
#include "mcarma/model.hpp"
#include "mcarma/parallel.hpp"
#include "mcarma/paths.hpp"

#include <cmath>
#include <deque>

namespace mcarma {

namespace detail {

/// z' = G z dt + B dL, propagated exactly over intervals with cached transition pieces.
class LinearFlow {
public:
    LinearFlow(Mat G, Mat B, Mat gauss_cov = Mat()) : G_(std::move(G)), B_(std::move(B)), Q_(std::move(gauss_cov)) {}

    struct Pieces {
        double dt = 0.0;
        Mat transition;   ///< e^{dt G}
        Mat drift;        ///< dt phi1(dt G) B
        Mat gauss_root;   ///< square root of the joint covariance of (state convolution, noise increment)
    };

    const Pieces& pieces(double dt) {
        for (const auto& p : cache_)
            if (std::abs(p.dt - dt) <= 1e-13 * dt) return p;
        Pieces p;
        p.dt = dt;
        p.transition = expm(dt * G_);
        p.drift = dt * phi1(dt * G_) * B_;
        if (Q_.size()) {
            const Eigen::Index N = G_.rows(), d = B_.cols();
            Mat Ga = Mat::Zero(N + d, N + d);
            Ga.topLeftCorner(N, N) = G_;
            Mat Ba(N + d, d);
            Ba.topRows(N) = B_;
            Ba.bottomRows(d).setIdentity();
            const Mat S = convolution_gramian(Ga, Ba * Q_ * Ba.transpose(), dt);
            Eigen::SelfAdjointEigenSolver<Mat> es(S);
            p.gauss_root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
        }
        if (cache_.size() >= 16) cache_.pop_front();
        cache_.push_back(std::move(p));
        return cache_.back();
    }

    /// e^{offset G} B xi
    Vec jump_input(double offset, const Vec& xi) const { return expm(offset * G_) * (B_ * xi); }

    const Mat& G() const { return G_; }
    const Mat& B() const { return B_; }
    bool gaussian() const { return Q_.size() > 0; }

private:
    Mat G_, B_, Q_;
    std::deque<Pieces> cache_;
};

inline void check_stream(const IncrementStream& s, Eigen::Index n, Eigen::Index m) {
    if (s.n != n || s.m != m) throw DimensionError("increment stream dimensions differ from the model");
    if (s.jumps.size() + 1 != s.grid.size()) throw std::invalid_argument("increment stream is malformed");
}

/// March the flow forward through every interval of the stream. Fills state columns when out != nullptr.
inline void march_forward(LinearFlow& flow, const IncrementStream& s, Vec& z, Mat* Zout, Mat* Lout, Vec* Lacc) {
    std::optional<RngStream> grng;
    if (s.gaussian_key) grng.emplace(*s.gaussian_key);
    const Vec gamma = vec(s.drift);
    const Eigen::Index N = z.size(), d = gamma.size();
    for (std::size_t k = 0; k < s.intervals(); ++k) {
        const double a = s.grid[k], b = s.grid[k + 1], dt = b - a;
        const auto& P = flow.pieces(dt);
        Vec next = P.transition * z + P.drift * gamma;
        Vec dL = gamma * dt;
        for (const auto& j : s.jumps[k]) {
            const Vec xi = vec(j.size);
            next += flow.jump_input(b - j.time, xi);
            dL += xi;
        }
        if (grng) {
            if (!flow.gaussian()) throw std::logic_error("Gaussian increments without a Gaussian flow");
            Vec w(N + d);
            for (Eigen::Index i = 0; i < N + d; ++i) w(i) = grng->normal();
            const Vec g = P.gauss_root * w;
            next += g.head(N);
            dL += g.tail(d);
        }
        z = next;
        if (Lacc) *Lacc += dL;
        if (Zout) Zout->col(static_cast<Eigen::Index>(k) + 1) = z;
        if (Lout) Lout->col(static_cast<Eigen::Index>(k) + 1) = *Lacc;
    }
}

/// Backward recursion w_{t_k} = e^{dt G} w_{t_{k+1}} + sum_jumps e^{(s - t_k) G} B xi over a stream, last interval first.
inline void march_backward(LinearFlow& flow, const IncrementStream& s, Vec& w, Mat* Wout, std::size_t col_offset) {
    if (s.gaussian_key) throw std::invalid_argument("two-sided construction does not support a Gaussian component");
    const Vec gamma = vec(s.drift);
    for (std::size_t k = s.intervals(); k-- > 0;) {
        const double a = s.grid[k], b = s.grid[k + 1], dt = b - a;
        const auto& P = flow.pieces(dt);
        Vec next = P.transition * w + P.drift * gamma;
        for (const auto& j : s.jumps[k]) next += flow.jump_input(j.time - a, vec(j.size));
        w = next;
        if (Wout && k >= col_offset && k - col_offset < static_cast<std::size_t>(Wout->cols()))
            Wout->col(static_cast<Eigen::Index>(k - col_offset)) = w;
    }
}

inline Vec stack_state(const std::vector<Mat>& Z, Eigen::Index p, Eigen::Index n, Eigen::Index m) {
    if (static_cast<Eigen::Index>(Z.size()) != p) throw DimensionError("initial state needs p blocks");
    Vec z(p * n * m);
    for (Eigen::Index i = 0; i < p; ++i) {
        const Mat& b = Z[static_cast<std::size_t>(i)];
        if (b.rows() != n || b.cols() != m) throw DimensionError("initial state block has wrong shape");
        z.segment(i * n * m, n * m) = vec(b);
    }
    return z;
}

inline std::vector<double> extended_grid(double start, const std::vector<double>& grid) {
    std::vector<double> g{start};
    g.insert(g.end(), grid.begin(), grid.end());
    return g;
}

}  // namespace detail

/// Replay one increment stream through the matrix-form state equation from Z_init.
inline PathBundle simulate_state(const MCARMAModel& model, const IncrementStream& stream, const std::vector<Mat>& Z_init) {
    detail::check_stream(stream, model.n(), model.m());
    const auto& f = model.companion();
    Vec z = detail::stack_state(Z_init, model.p(), model.n(), model.m());
    detail::LinearFlow flow(f.Avec, f.Evec, stream.gaussian_key ? stream.gaussian_cov : Mat());
    const auto T = static_cast<Eigen::Index>(stream.grid.size());
    PathBundle out;
    out.n = model.n();
    out.m = model.m();
    out.p = model.p();
    out.grid = stream.grid;
    Mat Z(z.size(), T), L = Mat::Zero(model.dim(), T);
    Z.col(0) = z;
    Vec Lacc = Vec::Zero(model.dim());
    detail::march_forward(flow, stream, z, &Z, &L, &Lacc);
    out.X.push_back(f.Cvec * Z);
    out.Z.push_back(std::move(Z));
    out.L.push_back(std::move(L));
    out.meta = {stream.key.seed, {stream.key.stream}, 0.0, "exact-jump"};
    return out;
}

inline void append_path(PathBundle& into, PathBundle&& one) {
    into.X.push_back(std::move(one.X.front()));
    if (!one.Z.empty()) into.Z.push_back(std::move(one.Z.front()));
    if (!one.L.empty()) into.L.push_back(std::move(one.L.front()));
    into.meta.stream_ids.push_back(one.meta.stream_ids.front());
}

/// Independent initial-value paths; path i uses stream key.child(i).
inline PathBundle simulate_state(const MCARMAModel& model, const std::vector<double>& grid, const std::vector<Mat>& Z_init,
                                 StreamKey key, std::size_t n_paths = 1, unsigned threads = 1) {
    std::vector<PathBundle> parts(n_paths);
    parallel_for(n_paths, threads, [&](std::size_t i) {
        parts[i] = simulate_state(model, sample_increments(model.levy(), grid, key.child(i)), Z_init);
    });
    PathBundle out;
    out.n = model.n();
    out.m = model.m();
    out.p = model.p();
    out.grid = grid;
    out.meta = {key.seed, {}, 0.0, "exact-jump"};
    for (auto& p : parts) append_path(out, std::move(p));
    return out;
}

inline double truncation_horizon(double rate, double tol) {
    if (!(rate > 0)) throw std::invalid_argument("truncation_horizon: decay rate must be positive");
    if (!(tol > 0 && tol < 1)) throw std::invalid_argument("truncation_horizon: tol must be in (0, 1)");
    return std::log(1.0 / tol) / rate;
}

/// Stationary causal paths: warm-up from -T with Z = 0 where T = ln(1/tol)/|tau|.
inline PathBundle simulate_stationary_causal(const MCARMAModel& model, const std::vector<double>& grid, StreamKey key,
                                             std::size_t n_paths = 1, double tol = 1e-10, unsigned threads = 1) {
    if (!model.causal()) throw std::invalid_argument("simulate_stationary_causal: model is not causal");
    check_grid(grid);
    const double T = truncation_horizon(-model.classification().tau, tol);
    const auto& f = model.companion();
    PathBundle out;
    out.n = model.n();
    out.m = model.m();
    out.p = model.p();
    out.grid = grid;
    out.meta = {key.seed, {}, T, "exact-jump stationary warm-up"};
    std::vector<Mat> Zs(n_paths), Ls(n_paths);
    parallel_for(n_paths, threads, [&](std::size_t i) {
        const StreamKey pk = key.child(i);
        auto [on_grid, warmup] = two_sided(model.levy(), grid, {grid.front() - T, grid.front()}, pk);
        detail::LinearFlow flow(f.Avec, f.Evec, model.levy().has_gaussian() ? model.levy().gaussian.rep() : Mat());
        Vec z = Vec::Zero(model.state_dim());
        detail::march_forward(flow, warmup, z, nullptr, nullptr, nullptr);
        Mat Z(z.size(), static_cast<Eigen::Index>(grid.size()));
        Mat L = Mat::Zero(model.dim(), Z.cols());
        Z.col(0) = z;
        Vec Lacc = Vec::Zero(model.dim());
        detail::march_forward(flow, on_grid, z, &Z, &L, &Lacc);
        Zs[i] = std::move(Z);
        Ls[i] = std::move(L);
    });
    for (std::size_t i = 0; i < n_paths; ++i) {
        out.X.push_back(f.Cvec * Zs[i]);
        out.Z.push_back(std::move(Zs[i]));
        out.L.push_back(std::move(Ls[i]));
        out.meta.stream_ids.push_back(key.child(i).stream);
    }
    return out;
}

/// Replay a stream through the hatted vectorized recursion; output columns are vec(X_t).
inline PathBundle simulate_vectorized_replay(const MCARMAModel& model, const IncrementStream& stream,
                                             const std::vector<Mat>& Z_init) {
    detail::check_stream(stream, model.n(), model.m());
    if (stream.gaussian_key) throw std::invalid_argument("simulate_vectorized_replay: Gaussian component not supported");
    const auto& f = model.companion();
    Vec w = detail::stack_state(Z_init, model.p(), model.n(), model.m());
    detail::LinearFlow flow(f.Avec_hat, f.Evec_hat);
    const auto T = static_cast<Eigen::Index>(stream.grid.size());
    Mat W(w.size(), T);
    W.col(0) = w;
    detail::march_forward(flow, stream, w, &W, nullptr, nullptr);
    PathBundle out;
    out.n = model.n();
    out.m = model.m();
    out.p = model.p();
    out.grid = stream.grid;
    out.X.push_back(f.Cvec_hat * W);
    out.Z.push_back(std::move(W));
    out.meta = {stream.key.seed, {stream.key.stream}, 0.0, "vectorized replay"};
    return out;
}

namespace detail {

/// Two-sided stationary solution z_t = int_{-inf}^t e^{(t-u)Gf} Bf dL_u + int_t^inf e^{(u-t)Gb} Bb dL_u.
/// Noise before grid.front() comes from the negative-time stream, the rest from the positive one.
inline std::pair<Mat, Mat> two_sided_paths(const LevySpec& levy, const std::vector<double>& grid, StreamKey key, double T,
                                           const Mat& Gf, const Mat& Bf, const Mat& Gb, const Mat& Bb) {
    if (levy.has_gaussian()) throw std::invalid_argument("two-sided construction does not support a Gaussian component");
    std::vector<double> pos = grid;
    pos.push_back(grid.back() + T);
    auto [future, past] = two_sided(levy, pos, {grid.front() - T, grid.front()}, key);
    const auto cols = static_cast<Eigen::Index>(grid.size());
    // forward part
    LinearFlow fwd(Gf, Bf);
    Vec z = Vec::Zero(Gf.rows());
    march_forward(fwd, past, z, nullptr, nullptr, nullptr);
    Mat F(z.size(), cols);
    F.col(0) = z;
    IncrementStream on_grid = future;
    on_grid.grid.pop_back();
    on_grid.jumps.pop_back();
    march_forward(fwd, on_grid, z, &F, nullptr, nullptr);
    // backward part
    LinearFlow bwd(Gb, Bb);
    Vec w = Vec::Zero(Gb.rows());
    Mat Bk(w.size(), cols);
    march_backward(bwd, future, w, &Bk, 0);
    return {F, Bk};
}

}  // namespace detail

/// Stationary non-causal paths from the spectral splitting: Z = forward(stable part) - backward(unstable part).
inline PathBundle simulate_stationary_split(const MCARMAModel& model, const std::vector<double>& grid, StreamKey key,
                                            std::size_t n_paths = 1, double tol = 1e-10, unsigned threads = 1) {
    check_grid(grid);
    const SpectralSplit sp = spectral_split(model);
    const double T = truncation_horizon(sp.margin, tol);
    const Mat Gf = sp.A_stable(), Bf = sp.P_stable * sp.E;
    const Mat Gb = -sp.A_unstable(), Bb = sp.P_unstable * sp.E;
    PathBundle out;
    out.n = model.n();
    out.m = model.m();
    out.p = model.p();
    out.grid = grid;
    out.meta = {key.seed, {}, T, "spectral split two-sided"};
    std::vector<Mat> Zs(n_paths);
    parallel_for(n_paths, threads, [&](std::size_t i) {
        auto [F, B] = detail::two_sided_paths(model.levy(), grid, key.child(i), T, Gf, Bf, Gb, Bb);
        Zs[i] = F - B;
    });
    for (std::size_t i = 0; i < n_paths; ++i) {
        out.X.push_back(sp.C * Zs[i]);
        out.Z.push_back(std::move(Zs[i]));
        out.meta.stream_ids.push_back(key.child(i).stream);
    }
    return out;
}

/// X_t = int_{-inf}^t e^{-(t-s)A} dL_s + int_t^inf e^{-(s-t)A} dL_s, truncated at T = ln(1/tol)/|tau(-A)|.
inline PathBundle simulate_wellbalanced_ou(const LinOpNM& A, const LevySpec& levy, const std::vector<double>& grid,
                                           StreamKey key, std::size_t n_paths = 1, double tol = 1e-10,
                                           const std::optional<ConeSpec>& cone = std::nullopt, unsigned threads = 1) {
    check_grid(grid);
    if (A.n() != levy.n || A.m() != levy.m) throw DimensionError("simulate_wellbalanced_ou: A and noise dimensions differ");
    const Mat a = A.rep();
    const double tau = spectral_bound(-a);
    if (!(tau < 0.0)) throw std::invalid_argument("simulate_wellbalanced_ou: -A is not stable");
    if (cone && is_quasi_positive(-A, *cone).refuted())
        throw std::invalid_argument("simulate_wellbalanced_ou: -A is not quasi-positive for the cone");
    const double T = truncation_horizon(-tau, tol);
    const Mat I = Mat::Identity(a.rows(), a.cols());
    PathBundle out;
    out.n = levy.n;
    out.m = levy.m;
    out.p = 1;
    out.grid = grid;
    out.meta = {key.seed, {}, T, "well-balanced two-sided"};
    std::vector<Mat> Xs(n_paths);
    parallel_for(n_paths, threads, [&](std::size_t i) {
        auto [F, B] = detail::two_sided_paths(levy, grid, key.child(i), T, -a, I, -a, I);
        Xs[i] = F + B;
    });
    for (std::size_t i = 0; i < n_paths; ++i) {
        out.X.push_back(std::move(Xs[i]));
        out.meta.stream_ids.push_back(key.child(i).stream);
    }
    return out;
}

/// Well-balanced OU as an MCARMA(2,0): A_1 = 0, A_2 = A^2, C_0 = -2A.
inline MCARMAModel wellbalanced_as_mcarma(const LinOpNM& A, const LevySpec& levy) {
    const Eigen::Index n = A.n(), m = A.m();
    return MCARMAModel({LinOpNM::zero(n, m), A * A}, {A.scaled(-2.0)}, levy);
}

enum class IntegrationMethod { Trapezoid, ExactMCAR1 };

/// Running integral X+_t = int_{t_0}^t X_s ds for every path (columns as in X).
inline std::vector<Mat> integrated_output(const PathBundle& paths, IntegrationMethod method = IntegrationMethod::Trapezoid,
                                          const MCARMAModel* model = nullptr) {
    std::vector<Mat> out;
    out.reserve(paths.paths());
    for (std::size_t i = 0; i < paths.paths(); ++i) {
        const Mat& X = paths.X[i];
        Mat I = Mat::Zero(X.rows(), X.cols());
        if (method == IntegrationMethod::Trapezoid) {
            for (Eigen::Index k = 1; k < X.cols(); ++k)
                I.col(k) = I.col(k - 1) + 0.5 * (paths.grid[k] - paths.grid[k - 1]) * (X.col(k) + X.col(k - 1));
        } else {
            if (!model || model->p() != 1) throw std::invalid_argument("integrated_output: exact identity needs an MCAR(1) model");
            if (paths.L.size() != paths.paths() || paths.Z.size() != paths.paths())
                throw std::invalid_argument("integrated_output: exact identity needs recorded state and noise");
            const Mat& A1 = model->A_ops()[0].rep();
            const Mat& C0 = model->C_ops()[0].rep();
            Eigen::PartialPivLU<Mat> lu(A1);
            const Mat& Z = paths.Z[i];
            for (Eigen::Index k = 0; k < X.cols(); ++k)
                I.col(k) = C0 * lu.solve(Z.col(k) - Z.col(0) - paths.L[i].col(k));
        }
        out.push_back(std::move(I));
    }
    return out;
}

}  // namespace mcarma
