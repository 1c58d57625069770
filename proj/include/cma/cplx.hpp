#pragma once

#include <complex>

#include "cma/error.hpp"
#include "cma/scalar.hpp"

namespace cma {

// Minimal complex number over a configurable real scalar. std::complex is
// only specified for the builtin floating types, so the dd lane needs its
// own; instantiated with S = double it interoperates with std::complex.
template <class S> struct Cx {
    S re{};
    S im{};

    Cx() = default;
    Cx(S r) : re(r) {}
    Cx(S r, S i) : re(r), im(i) {}

    static Cx from_std(std::complex<double> z) {
        return {from_double<S>(z.real()), from_double<S>(z.imag())};
    }
    std::complex<double> to_std() const { return {to_double(re), to_double(im)}; }

    friend Cx operator+(Cx a, Cx b) { return {a.re + b.re, a.im + b.im}; }
    friend Cx operator-(Cx a, Cx b) { return {a.re - b.re, a.im - b.im}; }
    friend Cx operator-(Cx a) { return {-a.re, -a.im}; }
    friend Cx operator*(Cx a, Cx b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend Cx operator*(S a, Cx b) { return {a * b.re, a * b.im}; }
    friend Cx operator*(Cx a, S b) { return {a.re * b, a.im * b}; }
    friend Cx operator/(Cx a, Cx b) {
        S d = b.re * b.re + b.im * b.im;
        return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
    }
    friend Cx operator/(Cx a, S b) { return {a.re / b, a.im / b}; }
    Cx& operator+=(Cx b) { *this = *this + b; return *this; }
    Cx& operator-=(Cx b) { *this = *this - b; return *this; }
    Cx& operator*=(Cx b) { *this = *this * b; return *this; }

    friend Cx conj(Cx a) { return {a.re, -a.im}; }
    friend S norm_sq(Cx a) { return a.re * a.re + a.im * a.im; }
    friend S abs(Cx a) { using cma::sqrt; return sqrt(norm_sq(a)); }
};

using Cxd = Cx<double>;

template <class S> Cx<S> exp(Cx<S> a) {
    using cma::cos;
    using cma::exp;
    using cma::sin;
    S e = exp(a.re);
    return {e * cos(a.im), e * sin(a.im)};
}

// Restricted to (numerically) real positive arguments, mirroring the jet-ring
// semantics: the grammar only ever applies log to real-composed sub-expressions.
template <class S> Cx<S> log(Cx<S> a) {
    using cma::log;
    if (std::abs(to_double(a.im)) > 1e-9 * (1.0 + std::abs(to_double(a.re))))
        throw Error(errc::non_real, "log of a non-real sub-expression is not supported");
    if (!(to_double(a.re) > 0.0))
        throw Error(errc::degenerate, "log requires a positive argument");
    return {log(a.re), S(0.0)};
}

template <class S> Cx<S> powi(Cx<S> a, long long p) {
    if (p < 0) {
        Cx<S> q = powi(a, -p);
        return Cx<S>(S(1.0)) / q;
    }
    Cx<S> r(S(1.0));
    Cx<S> base = a;
    unsigned long long e = (unsigned long long)p;
    while (e) {
        if (e & 1ull) r = r * base;
        base = base * base;
        e >>= 1;
    }
    return r;
}

} // namespace cma
