#pragma once

#include "mcarma/cones.hpp"
#include "mcarma/linop.hpp"
#include "mcarma/rng.hpp"

#include <algorithm>
#include <numbers>
#include <utility>
#include <variant>
#include <vector>

namespace mcarma {

struct GammaLaw {
    double shape = 1.0;
    double rate = 1.0;

    double mean() const { return shape / rate; }
    double second_moment() const { return shape * (shape + 1.0) / (rate * rate); }
    /// E[exp(i s g)]
    cplx cf(double s) const { return std::pow(cplx(1.0, -s / rate), -shape); }
};

struct Atom {
    Mat size;
    double prob = 1.0;
};

struct AtomsLaw {
    std::vector<Atom> atoms;
};

struct ScaledAtomLaw {
    Mat base;
    GammaLaw magnitude;
};

/// g * x x^T / |x|^2 with x isotropic Gaussian in R^d and g ~ Gamma.
struct RankOnePsdLaw {
    int d = 1;
    GammaLaw magnitude;
};

using JumpLaw = std::variant<AtomsLaw, ScaledAtomLaw, RankOnePsdLaw>;

/// Finite-activity Levy process on n x m matrices: total drift, Brownian part and compound Poisson jumps.
struct LevySpec {
    Eigen::Index n = 1, m = 1;
    Mat drift;
    LinOpNM gaussian;
    double rate = 0.0;
    JumpLaw jumps = AtomsLaw{};

    static LevySpec pure_drift(const Mat& gamma) {
        LevySpec l;
        l.n = gamma.rows();
        l.m = gamma.cols();
        l.drift = gamma;
        l.gaussian = LinOpNM::zero(l.n, l.m);
        l.jumps = AtomsLaw{{Atom{Mat::Zero(l.n, l.m), 1.0}}};
        l.validate();
        return l;
    }

    static LevySpec compound_poisson(const Mat& gamma, double rate, JumpLaw law) {
        LevySpec l = pure_drift(gamma);
        l.rate = rate;
        l.jumps = std::move(law);
        l.validate();
        return l;
    }

    bool has_gaussian() const { return gaussian.tag() != OpTag::Zero && gaussian.rep().cwiseAbs().maxCoeff() > 0.0; }

    void validate() const {
        if (n < 1 || m < 1) throw DimensionError("LevySpec: dimensions must be positive");
        if (drift.rows() != n || drift.cols() != m) throw DimensionError("LevySpec: drift has wrong shape");
        if (!drift.allFinite()) throw std::invalid_argument("LevySpec: non-finite drift");
        if (gaussian.n() != n || gaussian.m() != m) throw DimensionError("LevySpec: gaussian covariance has wrong shape");
        if (!(rate >= 0.0) || !std::isfinite(rate)) throw std::invalid_argument("LevySpec: rate must be finite and >= 0");
        if (has_gaussian()) {
            const Mat& Q = gaussian.rep();
            if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, Q.norm()))
                throw std::invalid_argument("LevySpec: gaussian covariance is not symmetric");
            if (detail::min_sym_eig(Q) < -1e-12 * std::max(1.0, Q.norm()))
                throw std::invalid_argument("LevySpec: gaussian covariance is not PSD");
        }
        std::visit(
            [&](const auto& law) {
                using T = std::decay_t<decltype(law)>;
                if constexpr (std::is_same_v<T, AtomsLaw>) {
                    if (law.atoms.empty()) throw std::invalid_argument("Atoms law: no atoms");
                    double total = 0.0;
                    for (const auto& a : law.atoms) {
                        if (a.size.rows() != n || a.size.cols() != m) throw DimensionError("Atoms law: atom has wrong shape");
                        if (!(a.prob >= 0.0)) throw std::invalid_argument("Atoms law: negative probability");
                        total += a.prob;
                    }
                    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("Atoms law: probabilities must sum to 1");
                } else if constexpr (std::is_same_v<T, ScaledAtomLaw>) {
                    if (law.base.rows() != n || law.base.cols() != m) throw DimensionError("ScaledAtom law: base has wrong shape");
                    if (!(law.magnitude.shape > 0 && law.magnitude.rate > 0))
                        throw std::invalid_argument("ScaledAtom law: gamma parameters must be positive");
                } else {
                    if (n != law.d || m != law.d) throw DimensionError("RankOnePSD law: process must be d x d");
                    if (!(law.magnitude.shape > 0 && law.magnitude.rate > 0))
                        throw std::invalid_argument("RankOnePSD law: gamma parameters must be positive");
                }
            },
            jumps);
    }
};

/// E[xi] for one jump.
inline Mat jump_mean(const LevySpec& l) {
    return std::visit(
        [&](const auto& law) -> Mat {
            using T = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<T, AtomsLaw>) {
                Mat s = Mat::Zero(l.n, l.m);
                for (const auto& a : law.atoms) s += a.prob * a.size;
                return s;
            } else if constexpr (std::is_same_v<T, ScaledAtomLaw>) {
                return law.magnitude.mean() * law.base;
            } else {
                return law.magnitude.mean() / law.d * Mat::Identity(law.d, law.d);
            }
        },
        l.jumps);
}

/// E[vec(xi) vec(xi)^T] for one jump; exact for every supported law.
inline Mat jump_second_moment(const LevySpec& l) {
    return std::visit(
        [&](const auto& law) -> Mat {
            using T = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<T, AtomsLaw>) {
                Mat s = Mat::Zero(l.n * l.m, l.n * l.m);
                for (const auto& a : law.atoms) s += a.prob * vec(a.size) * vec(a.size).transpose();
                return s;
            } else if constexpr (std::is_same_v<T, ScaledAtomLaw>) {
                const Vec b = vec(law.base);
                return law.magnitude.second_moment() * b * b.transpose();
            } else {
                // fourth moments of the uniform law on the sphere
                const int d = law.d;
                Mat s = Mat::Zero(d * d, d * d);
                const double c = 1.0 / (d * (d + 2.0));
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j)
                        for (int k = 0; k < d; ++k)
                            for (int q = 0; q < d; ++q) {
                                const double v = (i == j && k == q) + (i == k && j == q) + (i == q && j == k);
                                s(i + d * j, k + d * q) = c * v;
                            }
                return law.magnitude.second_moment() * s;
            }
        },
        l.jumps);
}

/// mu_L = gamma_L + rate * E[xi]
inline Mat mean_mu(const LevySpec& l) { return l.drift + l.rate * jump_mean(l); }

/// Covariance operator of L_1: Q_1 + rate * E[vec(xi) vec(xi)^T]
inline LinOpNM covariance_operator(const LevySpec& l) {
    return LinOpNM::general(l.n, l.m, l.gaussian.rep() + l.rate * jump_second_moment(l));
}

namespace detail {

inline cplx rank_one_cf(const RankOnePsdLaw& law, const Mat& z) {
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(z), Eigen::EigenvaluesOnly);
    const Vec mu = es.eigenvalues();
    const int d = law.d;
    if (d == 1) return law.magnitude.cf(mu(0));
    if (d == 2) {
        // periodic trapezoid rule in the angle converges geometrically
        const int N = 512;
        cplx acc = 0.0;
        for (int k = 0; k < N; ++k) {
            const double th = std::numbers::pi * k / N;
            const double c = std::cos(th), s = std::sin(th);
            acc += law.magnitude.cf(mu(0) * c * c + mu(1) * s * s);
        }
        return acc / static_cast<double>(N);
    }
    // d >= 3: fixed-seed spherical average
    RngStream rng(StreamKey{0xC0FFEE, static_cast<std::uint64_t>(d)});
    const int N = 40000;
    cplx acc = 0.0;
    for (int k = 0; k < N; ++k) {
        Vec x(d);
        for (int i = 0; i < d; ++i) x(i) = rng.normal();
        x /= x.norm();
        acc += law.magnitude.cf((mu.array() * x.array().square()).sum());
    }
    return acc / static_cast<double>(N);
}

}  // namespace detail

/// psi_L(z) with log E[exp(i <L_1, z>)] = psi_L(z), uncompensated jump part.
inline cplx characteristic_exponent(const LevySpec& l, const Mat& z) {
    if (z.rows() != l.n || z.cols() != l.m) throw DimensionError("characteristic_exponent: z has wrong shape");
    const Vec zv = vec(z);
    cplx psi(0.0, frob(l.drift, z));
    psi -= 0.5 * zv.dot(l.gaussian.rep() * zv);
    if (l.rate == 0.0) return psi;
    const cplx jcf = std::visit(
        [&](const auto& law) -> cplx {
            using T = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<T, AtomsLaw>) {
                cplx s = 0.0;
                for (const auto& a : law.atoms) s += a.prob * std::exp(cplx(0.0, frob(a.size, z)));
                return s;
            } else if constexpr (std::is_same_v<T, ScaledAtomLaw>) {
                return law.magnitude.cf(frob(law.base, z));
            } else {
                return detail::rank_one_cf(law, z);
            }
        },
        l.jumps);
    return psi + l.rate * (jcf - 1.0);
}

inline Mat sample_jump(const LevySpec& l, RngStream& rng) {
    return std::visit(
        [&](const auto& law) -> Mat {
            using T = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<T, AtomsLaw>) {
                if (law.atoms.size() == 1) return law.atoms.front().size;
                double u = rng.uniform(), acc = 0.0;
                for (const auto& a : law.atoms) {
                    acc += a.prob;
                    if (u < acc) return a.size;
                }
                return law.atoms.back().size;
            } else if constexpr (std::is_same_v<T, ScaledAtomLaw>) {
                return rng.gamma(law.magnitude.shape, law.magnitude.rate) * law.base;
            } else {
                const Vec x = detail::unit_gaussian(rng, law.d);
                return rng.gamma(law.magnitude.shape, law.magnitude.rate) * (x * x.transpose());
            }
        },
        l.jumps);
}

/// True when drift, Gaussian part and jump support make every increment lie in the cone.
inline bool is_cone_increasing(const LevySpec& l, const ConeSpec& cone, std::string* why = nullptr) {
    auto fail = [&](const std::string& s) {
        if (why) *why = s;
        return false;
    };
    auto as_cone = [&](const Mat& x) { return cone.is_psd() ? x : unvec(vec(x), x.size(), 1); };
    if (cone.copies != 1) return fail("product cones are not noise cones");
    if (l.n * l.m != static_cast<Eigen::Index>(cone.is_psd() ? cone.d * cone.d : cone.d))
        return fail("dimension mismatch with cone");
    if (!contains(cone, as_cone(l.drift))) return fail("drift is outside the cone");
    if (l.has_gaussian()) return fail("a cone-increasing process has no Gaussian part");
    if (l.rate == 0.0) return true;
    return std::visit(
        [&](const auto& law) -> bool {
            using T = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<T, AtomsLaw>) {
                for (const auto& a : law.atoms)
                    if (a.prob > 0 && !contains(cone, as_cone(a.size))) return fail("an atom lies outside the cone");
                return true;
            } else if constexpr (std::is_same_v<T, ScaledAtomLaw>) {
                return contains(cone, as_cone(law.base)) ? true : fail("scaled atom base lies outside the cone");
            } else {
                return cone.is_psd() || law.d == 1 ? true : fail("rank-one PSD jumps need a PSD cone");
            }
        },
        l.jumps);
}

struct Jump {
    double time = 0.0;
    Mat size;
};

/// Noise increments on a grid: per-interval jumps (strictly inside) plus deterministic drift.
struct IncrementStream {
    Eigen::Index n = 1, m = 1;
    std::vector<double> grid;
    std::vector<std::vector<Jump>> jumps;
    Mat drift;  ///< drift rate; the interval increment is drift * dt
    std::optional<StreamKey> gaussian_key;
    Mat gaussian_cov;
    StreamKey key;

    std::size_t intervals() const { return grid.empty() ? 0 : grid.size() - 1; }
    double dt(std::size_t k) const { return grid[k + 1] - grid[k]; }

    Mat drift_increment(std::size_t k) const { return drift * dt(k); }

    /// Increment of the finite-variation part on interval k.
    Mat increment(std::size_t k) const {
        Mat s = drift_increment(k);
        for (const auto& j : jumps[k]) s += j.size;
        return s;
    }

    std::size_t jump_count() const {
        std::size_t c = 0;
        for (const auto& v : jumps) c += v.size();
        return c;
    }

    /// The same jumps distributed over another grid spanning the same range.
    IncrementStream rebin(const std::vector<double>& new_grid) const {
        if (gaussian_key) throw std::invalid_argument("rebin: Gaussian increments are tied to the original grid");
        if (new_grid.size() < 2 || new_grid.front() != grid.front() || new_grid.back() != grid.back())
            throw std::invalid_argument("rebin: new grid must span the same range");
        IncrementStream out = *this;
        out.grid = new_grid;
        out.jumps.assign(new_grid.size() - 1, {});
        for (const auto& iv : jumps)
            for (const auto& j : iv) {
                auto it = std::upper_bound(new_grid.begin(), new_grid.end(), j.time);
                const auto k = static_cast<std::size_t>(it - new_grid.begin()) - 1;
                if (new_grid[k] == j.time) throw std::invalid_argument("rebin: a jump falls on a grid point");
                out.jumps[k].push_back(j);
            }
        return out;
    }
};

inline void check_grid(const std::vector<double>& grid) {
    if (grid.size() < 2) throw std::invalid_argument("grid needs at least two points");
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (!(grid[k] > grid[k - 1])) throw std::invalid_argument("grid must be strictly increasing");
}

/// Jump-exact increments: Poisson counts per interval, conditional uniform order statistics for the times.
inline IncrementStream sample_increments(const LevySpec& l, const std::vector<double>& grid, StreamKey key) {
    check_grid(grid);
    RngStream rng(key);
    IncrementStream s;
    s.n = l.n;
    s.m = l.m;
    s.grid = grid;
    s.drift = l.drift;
    s.key = key;
    s.jumps.resize(grid.size() - 1);
    if (l.has_gaussian()) {
        s.gaussian_key = key.child(0x6a55);
        s.gaussian_cov = l.gaussian.rep();
    }
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double a = grid[k], b = grid[k + 1];
        const long count = rng.poisson(l.rate * (b - a));
        auto& iv = s.jumps[k];
        iv.reserve(static_cast<std::size_t>(count));
        for (long c = 0; c < count; ++c) {
            double u;
            do u = rng.uniform();
            while (u <= 0.0);
            double t = a + u * (b - a);
            if (!(t > a && t < b)) t = 0.5 * (a + b);
            iv.push_back({t, Mat()});
        }
        std::sort(iv.begin(), iv.end(), [](const Jump& x, const Jump& y) { return x.time < y.time; });
        for (auto& j : iv) j.size = sample_jump(l, rng);
    }
    return s;
}

/// Keys for the independent positive- and negative-time halves of a two-sided process.
inline std::pair<StreamKey, StreamKey> two_sided(StreamKey key) { return {key.child(1), key.child(2)}; }

/// Two independent streams: one on pos_grid (t >= 0), one on neg_grid (t <= 0).
inline std::pair<IncrementStream, IncrementStream> two_sided(const LevySpec& l, const std::vector<double>& pos_grid,
                                                             const std::vector<double>& neg_grid, StreamKey key) {
    if (!pos_grid.empty() && pos_grid.front() < 0.0) throw std::invalid_argument("two_sided: positive grid starts below 0");
    if (!neg_grid.empty() && neg_grid.back() > 0.0) throw std::invalid_argument("two_sided: negative grid ends above 0");
    const auto [kp, kn] = two_sided(key);
    return {sample_increments(l, pos_grid, kp), sample_increments(l, neg_grid, kn)};
}

}  // namespace mcarma
