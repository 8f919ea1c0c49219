#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <type_traits>
#include <vector>

#include "dscat/types.hpp"

namespace dscat {

struct QuadratureRule {
    std::vector<double> x;  // nodes on [-1, 1]
    std::vector<double> w;
};

// Gauss-Legendre rule; n in {8, 16, 20, 32}.
const QuadratureRule& gauss_legendre(int n);

// Kronrod 15-point rule and the embedded 7-point Gauss weights (index-aligned with
// the Kronrod nodes, zero where a node is Kronrod-only).
const QuadratureRule& kronrod15();
const std::vector<double>& gauss7_embedded();

// Nodes and weights of a composite Gauss-Legendre rule over [a, b].
QuadratureRule composite_gauss(double a, double b, int panels, int order);

namespace detail {
inline double qnorm(double v) { return std::abs(v); }
inline double qnorm(const cplx& v) { return std::abs(v); }
template <class Derived>
double qnorm(const Eigen::MatrixBase<Derived>& v) {
    return v.norm();
}
}  // namespace detail

struct QuadOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    int max_intervals = 20000;
};

template <class T>
struct QuadResult {
    T value;
    double error = 0.0;
    int intervals = 0;
    bool converged = false;
};

// Globally adaptive Gauss-Kronrod (7/15) for scalar, complex, vector or matrix
// valued integrands. `breaks` must be increasing; each gap is an initial panel.
template <class F>
auto integrate_adaptive(F&& f, const std::vector<double>& breaks, const QuadOptions& opt = {})
    -> QuadResult<std::decay_t<std::invoke_result_t<F, double>>> {
    using T = std::decay_t<std::invoke_result_t<F, double>>;
    const auto& kr = kronrod15();
    const auto& g7 = gauss7_embedded();

    struct Segment {
        double a, b;
        T value;
        double err;
    };
    auto eval = [&](double a, double b) {
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        T fc = f(c);
        T k = fc * kr.w[0];
        T g = fc * g7[0];
        for (std::size_t i = 1; i < kr.x.size(); ++i) {
            T s = f(c - h * kr.x[i]) + f(c + h * kr.x[i]);
            k += s * kr.w[i];
            if (g7[i] != 0.0) g += s * g7[i];
        }
        k *= h;
        g *= h;
        const double err = detail::qnorm(k - g);
        return Segment{a, b, k, err};
    };
    auto cmp = [](const Segment& l, const Segment& r) { return l.err < r.err; };
    std::priority_queue<Segment, std::vector<Segment>, decltype(cmp)> heap(cmp);

    QuadResult<T> out;
    bool first = true;
    double total_err = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (!(breaks[i + 1] > breaks[i])) continue;
        Segment s = eval(breaks[i], breaks[i + 1]);
        if (first) {
            out.value = s.value;
            first = false;
        } else {
            out.value += s.value;
        }
        total_err += s.err;
        heap.push(std::move(s));
    }
    if (first) {
        out.value = f(breaks.empty() ? 0.0 : breaks.front()) * 0.0;
        out.converged = true;
        return out;
    }
    int count = static_cast<int>(heap.size());
    while (true) {
        const double target = std::max(opt.abs_tol, opt.rel_tol * detail::qnorm(out.value));
        if (total_err <= target) {
            out.converged = true;
            break;
        }
        if (count >= opt.max_intervals) break;
        Segment worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) break;  // interval exhausted
        heap.pop();
        Segment l = eval(worst.a, mid), r = eval(mid, worst.b);
        out.value += l.value + r.value - worst.value;
        total_err += l.err + r.err - worst.err;
        heap.push(std::move(l));
        heap.push(std::move(r));
        ++count;
    }
    // recompute the sums to shed accumulated cancellation error
    bool init = false;
    double e = 0.0;
    while (!heap.empty()) {
        const Segment& s = heap.top();
        if (!init) {
            out.value = s.value;
            init = true;
        } else {
            out.value += s.value;
        }
        e += s.err;
        heap.pop();
    }
    out.error = e;
    out.intervals = count;
    return out;
}

// Repeated Richardson extrapolation for a geometric step sequence h_k = h_0 / r^k with
// an error expansion in powers p_1 < p_2 < ... of h. Entry j of the result is the
// order-j estimate built from the j+1 smallest steps.
template <class T>
std::vector<T> richardson_diagonal(const std::vector<T>& samples, double ratio,
                                   const std::vector<double>& powers) {
    std::vector<T> prev = samples, diag;
    if (samples.empty()) return diag;
    diag.push_back(samples.back());
    for (std::size_t j = 1; j < samples.size(); ++j) {
        const double p = powers[std::min(j - 1, powers.size() - 1)];
        const double f = std::pow(ratio, p) - 1.0;
        std::vector<T> cur;
        for (std::size_t k = 1; k < prev.size(); ++k) cur.push_back(prev[k] + (prev[k] - prev[k - 1]) / f);
        prev = std::move(cur);
        diag.push_back(prev.back());
    }
    return diag;
}

}  // namespace dscat
