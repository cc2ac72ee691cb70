#pragma once

#include "mcarma/matops.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace mcarma {

struct QuadratureOptions {
    double abs_tol = 1e-9;
    double rel_tol = 1e-7;
    int max_intervals = 2000;
};

template <class M>
struct QuadratureResult {
    M value;
    double error = 0.0;
    int intervals = 0;
};

namespace detail {

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F, class M>
void gk15(F& f, double a, double b, M& kron, double& err) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    M fc = f(c);
    kron = fc * kWgk[7];
    M gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        M f1 = f(c - dx);
        M f2 = f(c + dx);
        kron += (f1 + f2) * kWgk[j];
        if (j % 2 == 1) gauss += (f1 + f2) * kWg[j / 2];
    }
    kron *= h;
    gauss *= h;
    err = (kron - gauss).norm();
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod quadrature of a matrix-valued integrand on [a, b].
template <class F>
auto integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
    using M = typename std::decay_t<decltype(f(a))>::PlainObject;
    struct Piece {
        double a, b;
        M value;
        double err;
        bool operator<(const Piece& o) const { return err < o.err; }
    };
    QuadratureResult<M> out;
    M first;
    double e0 = 0.0;
    detail::gk15(f, a, b, first, e0);
    if (a == b) {
        out.value = first * 0.0;
        return out;
    }
    std::priority_queue<Piece> heap;
    heap.push({a, b, first, e0});
    M total = first;
    double err = e0;
    int count = 1;
    while (err > std::max(opt.abs_tol, opt.rel_tol * total.norm())) {
        if (count >= opt.max_intervals)
            throw NonConvergenceError("integrate: interval budget exhausted (error " + std::to_string(err) + ")");
        Piece worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        Piece left{worst.a, mid, M(), 0.0}, right{mid, worst.b, M(), 0.0};
        detail::gk15(f, left.a, left.b, left.value, left.err);
        detail::gk15(f, right.a, right.b, right.value, right.err);
        total += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        ++count;
        if (count % 64 == 0) {
            // resum to keep round-off from accumulating in the running totals
            std::priority_queue<Piece> copy = heap;
            total = copy.top().value * 0.0;
            err = 0.0;
            while (!copy.empty()) {
                total += copy.top().value;
                err += copy.top().err;
                copy.pop();
            }
        }
    }
    out.value = total;
    out.error = err;
    out.intervals = count;
    return out;
}

/// \int_a^\infty f(s) ds through s = a + u/(1-u).
template <class F>
auto integrate_to_infinity(F&& f, double a, const QuadratureOptions& opt = {}) {
    auto g = [&](double u) {
        const double w = 1.0 - u;
        return f(a + u / w) * (1.0 / (w * w));
    };
    return integrate(g, 0.0, 1.0, opt);
}

}  // namespace mcarma
