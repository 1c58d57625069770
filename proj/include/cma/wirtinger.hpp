#pragma once

#include <vector>

#include "cma/hermitian.hpp"
#include "cma/jet.hpp"

namespace cma {

// Complex quantities are carried as coupled real jets; Wirtinger assembly
// happens only at extraction, so the AD core stays purely real.
//
// Real-coordinate convention everywhere: variable 2k is x_{k+1}, variable
// 2k+1 is y_{k+1}, with z_k = x_k + i y_k.
template <class S> struct CJet {
    Jet<S> re, im;

    CJet() = default;
    CJet(Jet<S> r, Jet<S> i) : re(std::move(r)), im(std::move(i)) {}
    static CJet constant(const LayoutPtr& lay, Cx<S> v) {
        return {Jet<S>::constant(lay, v.re), Jet<S>::constant(lay, v.im)};
    }
    // z_k as a complex jet: x-part seeds variable 2k, y-part variable 2k+1
    static CJet coordinate(const LayoutPtr& lay, int k, Cx<S> value) {
        return {Jet<S>::variable(lay, 2 * k, value.re), Jet<S>::variable(lay, 2 * k + 1, value.im)};
    }

    Cx<S> value() const { return {re.value(), im.value()}; }

    friend CJet operator+(const CJet& a, const CJet& b) { return {a.re + b.re, a.im + b.im}; }
    friend CJet operator-(const CJet& a, const CJet& b) { return {a.re - b.re, a.im - b.im}; }
    friend CJet operator-(const CJet& a) { return {-a.re, -a.im}; }
    friend CJet operator*(const CJet& a, const CJet& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend CJet operator*(const CJet& a, Cx<S> c) {
        return {a.re * c.re - a.im * c.im, a.re * c.im + a.im * c.re};
    }
    friend CJet operator*(Cx<S> c, const CJet& a) { return a * c; }
    friend CJet operator*(const CJet& a, S c) { return {a.re * c, a.im * c}; }
    friend CJet conj(const CJet& a) { return {a.re, -a.im}; }
    friend Jet<S> norm_jet(const CJet& a) { return a.re * a.re + a.im * a.im; }
    friend CJet operator/(const CJet& a, const CJet& b) {
        Jet<S> inv = inverse(norm_jet(b));
        CJet num = a * conj(b);
        return {num.re * inv, num.im * inv};
    }
};

// maximum |coefficient| of the imaginary part, for realness checks
template <class S> double im_magnitude(const CJet<S>& a) {
    double m = 0.0;
    for (int i = 0; i < a.im.size(); ++i) m = std::max(m, std::abs(to_double(a.im[i])));
    return m;
}

template <class S> double re_magnitude(const CJet<S>& a) {
    double m = 0.0;
    for (int i = 0; i < a.re.size(); ++i) m = std::max(m, std::abs(to_double(a.re[i])));
    return m;
}

template <class S> CJet<S> exp(const CJet<S>& a) {
    Jet<S> er = exp(a.re);
    return {er * cos(a.im), er * sin(a.im)};
}

// log of a complex jet is supported only for arguments whose imaginary part
// vanishes identically (the real-valued sub-expressions the grammar produces);
// a genuinely complex argument is rejected.
template <class S> CJet<S> log(const CJet<S>& a) {
    if (im_magnitude(a) > 1e-9 * (1.0 + re_magnitude(a)))
        throw Error(errc::non_real, "log of a non-real sub-expression is not supported");
    return {log(a.re), a.im * S(0.0)};
}

template <class S> CJet<S> powi(const CJet<S>& a, long long p) {
    if (p < 0) {
        CJet<S> q = powi(a, -p);
        Jet<S> inv = inverse(norm_jet(q));
        CJet<S> c = conj(q);
        return {c.re * inv, c.im * inv};
    }
    CJet<S> r = CJet<S>::constant(a.re.layout(), Cx<S>(S(1.0)));
    CJet<S> base = a;
    unsigned long long e = (unsigned long long)p;
    while (e) {
        if (e & 1ull) r = r * base;
        base = base * base;
        e >>= 1;
    }
    return r;
}

// --- Wirtinger extraction ------------------------------------------------------

template <class S> struct WirtingerDerivatives {
    int n = 0;
    std::vector<Cx<S>> gradient;           // du/dz_i
    std::vector<Cx<S>> conjugateGradient;  // du/dzbar_i
    HMat<S> hessian;                       // d2u/dz_i dzbar_j (Hermitian)
    std::vector<Cx<S>> holomorphicHessian; // d2u/dz_i dz_j, row-major symmetric
};

namespace detail {

template <class S> S first_partial(const Jet<S>& u, int var) {
    return u[u.layout()->unit_index(var)];
}

// d^2 u / dx_a dx_b from Taylor coefficients (factor 2 on the diagonal)
template <class S> S second_partial(const Jet<S>& u, int a, int b) {
    uint8_t e[JetLayout::kMaxDim] = {};
    e[a] += 1;
    e[b] += 1;
    int idx = u.layout()->rank(e);
    return u[idx] * S(a == b ? 2.0 : 1.0);
}

} // namespace detail

// Assemble Wirtinger data of a real scalar field from its real jet
// (dimension 2n, order >= 2) by the change of basis
//   d/dz  = (d/dx - i d/dy)/2,   d/dzbar = (d/dx + i d/dy)/2.
template <class S> WirtingerDerivatives<S> wirtinger(const Jet<S>& u) {
    if (u.dim() % 2 != 0) throw Error(errc::config, "wirtinger: jet dimension must be 2n");
    if (u.order() < 2) throw Error(errc::config, "wirtinger: jet order must be >= 2");
    int n = u.dim() / 2;
    WirtingerDerivatives<S> w;
    w.n = n;
    w.gradient.resize(n);
    w.conjugateGradient.resize(n);
    w.hessian = HMat<S>(n);
    w.holomorphicHessian.assign(std::size_t(n) * n, Cx<S>(S(0.0)));
    for (int i = 0; i < n; ++i) {
        S ux = detail::first_partial(u, 2 * i);
        S uy = detail::first_partial(u, 2 * i + 1);
        w.gradient[i] = Cx<S>(ux * S(0.5), uy * S(-0.5));
        w.conjugateGradient[i] = Cx<S>(ux * S(0.5), uy * S(0.5));
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            S xx = detail::second_partial(u, 2 * i, 2 * j);
            S yy = detail::second_partial(u, 2 * i + 1, 2 * j + 1);
            S xy = detail::second_partial(u, 2 * i, 2 * j + 1);
            S yx = detail::second_partial(u, 2 * i + 1, 2 * j);
            w.hessian.at(i, j) = Cx<S>((xx + yy) * S(0.25), (xy - yx) * S(0.25));
            w.holomorphicHessian[std::size_t(i) * n + j] =
                Cx<S>((xx - yy) * S(0.25), -(xy + yx) * S(0.25));
        }
    }
    return w;
}

// Complex-jet entry point: validates the represented field is real-valued.
template <class S> WirtingerDerivatives<S> wirtinger(const CJet<S>& u) {
    if (std::abs(to_double(u.im.value())) > 1e-12)
        throw Error(errc::non_real, "wirtinger: field has a non-real value part");
    return wirtinger(u.re);
}

// First Wirtinger derivatives of a real field as complex jets one order down;
// used to differentiate gradient fields (lifts, pairings, blow-up probes).
template <class S> std::vector<CJet<S>> wirtinger_gradient_jets(const Jet<S>& u) {
    int n = u.dim() / 2;
    std::vector<CJet<S>> g;
    g.reserve(n);
    for (int i = 0; i < n; ++i) {
        Jet<S> ux = jet_partial(u, 2 * i);
        Jet<S> uy = jet_partial(u, 2 * i + 1);
        g.push_back({(ux)*S(0.5), uy * S(-0.5)});
    }
    return g;
}

} // namespace cma
