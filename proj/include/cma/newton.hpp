#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cma/jet.hpp"

namespace cma {

// Small dense real LU with partial pivoting, shared by the Newton phases.
template <class S> struct RealLu {
    int n = 0;
    std::vector<S> a; // factored in place
    std::vector<int> perm;

    static RealLu factor(std::vector<S> m, int n) {
        RealLu lu;
        lu.n = n;
        lu.a = std::move(m);
        lu.perm.resize(n);
        for (int i = 0; i < n; ++i) lu.perm[i] = i;
        for (int k = 0; k < n; ++k) {
            int piv = k;
            double best = std::abs(to_double(lu.a[std::size_t(k) * n + k]));
            for (int r = k + 1; r < n; ++r) {
                double c = std::abs(to_double(lu.a[std::size_t(r) * n + k]));
                if (c > best) {
                    best = c;
                    piv = r;
                }
            }
            if (best == 0.0) throw Error(errc::degenerate, "singular Jacobian in Newton solve");
            if (piv != k) {
                for (int j = 0; j < n; ++j)
                    std::swap(lu.a[std::size_t(k) * n + j], lu.a[std::size_t(piv) * n + j]);
                std::swap(lu.perm[k], lu.perm[piv]);
            }
            S d = lu.a[std::size_t(k) * n + k];
            for (int i = k + 1; i < n; ++i) {
                S m_ik = lu.a[std::size_t(i) * n + k] / d;
                lu.a[std::size_t(i) * n + k] = m_ik;
                for (int j = k + 1; j < n; ++j)
                    lu.a[std::size_t(i) * n + j] = lu.a[std::size_t(i) * n + j] - m_ik * lu.a[std::size_t(k) * n + j];
            }
        }
        return lu;
    }

    void solve(std::span<const S> b, std::span<S> x) const {
        std::vector<S> y(n);
        for (int i = 0; i < n; ++i) y[i] = b[perm[i]];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < i; ++j) y[i] = y[i] - a[std::size_t(i) * n + j] * y[j];
        for (int i = n - 1; i >= 0; --i) {
            for (int j = i + 1; j < n; ++j) y[i] = y[i] - a[std::size_t(i) * n + j] * x[j];
            x[i] = y[i] / a[std::size_t(i) * n + i];
        }
    }
};

struct NewtonOptions {
    int max_iterations = 64;
    double tolerance = 1e-12; // step-stagnation threshold (scaled for dd)
};

template <class S> double newton_tol(const NewtonOptions& opt) {
    if constexpr (std::is_same_v<S, Dd>) return opt.tolerance * 1e-14;
    else return opt.tolerance;
}

// Plain Newton on F(x) = 0. F is called with the unknowns lifted to order-1
// jets (over their own layout) and must return one residual jet per unknown;
// value and Jacobian both come from that single evaluation.
template <class S, class Fn>
std::vector<S> newton_root(Fn&& F, std::vector<S> x, const NewtonOptions& opt = {}) {
    const int m = int(x.size());
    auto lay = JetLayout::get(m, 1);
    const double tol = newton_tol<S>(opt);
    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        std::vector<Jet<S>> st;
        st.reserve(m);
        for (int i = 0; i < m; ++i) st.push_back(Jet<S>::variable(lay, i, x[i]));
        std::vector<Jet<S>> res = F(std::span<const Jet<S>>(st));
        std::vector<S> jac(std::size_t(m) * m), rhs(m);
        for (int i = 0; i < m; ++i) {
            rhs[i] = res[i].value();
            for (int j = 0; j < m; ++j) jac[std::size_t(i) * m + j] = res[i][lay->unit_index(j)];
        }
        auto lu = RealLu<S>::factor(std::move(jac), m);
        std::vector<S> dx(m);
        lu.solve(rhs, dx);
        double step = 0.0, scale = 1.0;
        for (int i = 0; i < m; ++i) {
            x[i] = x[i] - dx[i];
            step = std::max(step, std::abs(to_double(dx[i])));
            scale = std::max(scale, std::abs(to_double(x[i])));
        }
        if (step < tol * scale) return x;
    }
    throw Error(errc::convergence, "Newton iteration did not converge within the iteration budget");
}

// Jet phase: chord iterations around a converged root. The unknowns become
// jets over the caller's parameter layout; each sweep with the frozen numeric
// Jacobian gains (at least) one correct Taylor degree, so order + 4 sweeps
// saturate the expansion of the implicit solution map.
template <class S, class Fn>
std::vector<Jet<S>> newton_jets(Fn&& F, const std::vector<S>& root, const LayoutPtr& paramLay,
                                const NewtonOptions& opt = {}) {
    const int m = int(root.size());
    // frozen Jacobian at the root
    auto lay1 = JetLayout::get(m, 1);
    std::vector<Jet<S>> st1;
    st1.reserve(m);
    for (int i = 0; i < m; ++i) st1.push_back(Jet<S>::variable(lay1, i, root[i]));
    std::vector<Jet<S>> res1 = F(std::span<const Jet<S>>(st1));
    std::vector<S> jac(std::size_t(m) * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) jac[std::size_t(i) * m + j] = res1[i][lay1->unit_index(j)];
    auto lu = RealLu<S>::factor(std::move(jac), m);

    std::vector<Jet<S>> x;
    x.reserve(m);
    for (int i = 0; i < m; ++i) x.push_back(Jet<S>::constant(paramLay, root[i]));

    const int ncoef = paramLay->size();
    const double tol = newton_tol<S>(opt);
    std::vector<S> rhs(m), dx(m);
    for (int sweep = 0; sweep < paramLay->order() + 4; ++sweep) {
        std::vector<Jet<S>> res = F(std::span<const Jet<S>>(x));
        double change = 0.0;
        for (int c = 0; c < ncoef; ++c) {
            for (int i = 0; i < m; ++i) rhs[i] = res[i][c];
            lu.solve(rhs, dx);
            for (int i = 0; i < m; ++i) {
                x[i][c] = x[i][c] - dx[i];
                change = std::max(change, std::abs(to_double(dx[i])));
            }
        }
        if (change < tol) return x;
    }
    // Final residual check; the chord map contracts one degree per sweep, so
    // failure here means the base root or the layout order is unusable.
    std::vector<Jet<S>> res = F(std::span<const Jet<S>>(x));
    double rmax = 0.0;
    for (int i = 0; i < m; ++i)
        for (int c = 0; c < ncoef; ++c) rmax = std::max(rmax, std::abs(to_double(res[i][c])));
    if (rmax > 1e3 * tol)
        throw Error(errc::convergence, "jet Newton: chord phase did not reach a fixed point");
    return x;
}

} // namespace cma
