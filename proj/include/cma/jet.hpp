#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "cma/error.hpp"
#include "cma/scalar.hpp"

namespace cma {

// Shared immutable description of a dense truncated-Taylor space: all
// multi-indices of total degree <= order in `dim` real variables, in graded
// lexicographic order. Layouts are cached per (dim, order); every Jet holds
// a shared_ptr to its layout. The product triple table (k, i, j) with
// exps[i] + exps[j] = exps[k] is precomputed so jet multiplication is a
// single fused loop.
//
// Coefficients are Taylor coefficients: c_alpha = (d^alpha f) / alpha!.
class JetLayout {
public:
    static constexpr int kMaxDim = 16;
    static constexpr int kMaxOrder = 8;

    struct Triple {
        uint32_t k, i, j;
    };

    static std::shared_ptr<const JetLayout> get(int dim, int order);

    int dim() const { return dim_; }
    int order() const { return order_; }
    int size() const { return int(exps_.size()) / dim_; }

    const uint8_t* exponents(int idx) const { return exps_.data() + std::size_t(idx) * dim_; }
    int degree(int idx) const { return degree_[idx]; }
    // first index of the given total degree; degree_offset(order+1) == size()
    int degree_offset(int deg) const { return offsets_[deg]; }

    // rank of a multi-index, or -1 when its degree exceeds the order
    int rank(const uint8_t* e) const;
    int unit_index(int var) const { return 1 + var; } // degree-1 block follows the constant

    const std::vector<Triple>& product_triples() const { return triples_; }

private:
    JetLayout(int dim, int order);

    int dim_, order_;
    std::vector<uint8_t> exps_;
    std::vector<int> degree_;
    std::vector<int> offsets_;
    std::unordered_map<uint64_t, int> rank_;
    std::vector<Triple> triples_;

    static uint64_t pack(const uint8_t* e, int dim);
};

using LayoutPtr = std::shared_ptr<const JetLayout>;

// Truncated multivariate Taylor expansion of a real scalar field. Immutable
// value semantics; all arithmetic is exact truncation at the layout order.
template <class S> class Jet {
public:
    Jet() = default;
    explicit Jet(LayoutPtr lay) : lay_(std::move(lay)), c_(lay_->size(), S(0.0)) {}

    static Jet constant(LayoutPtr lay, S v) {
        Jet j(std::move(lay));
        j.c_[0] = v;
        return j;
    }
    // seed: value v in slot 0, unit coefficient on the variable's own axis
    static Jet variable(LayoutPtr lay, int var, S v) {
        Jet j(std::move(lay));
        j.c_[0] = v;
        if (j.lay_->order() >= 1) j.c_[j.lay_->unit_index(var)] = S(1.0);
        return j;
    }

    const LayoutPtr& layout() const { return lay_; }
    int order() const { return lay_->order(); }
    int dim() const { return lay_->dim(); }
    int size() const { return int(c_.size()); }

    S value() const { return c_[0]; }
    S& operator[](int i) { return c_[i]; }
    const S& operator[](int i) const { return c_[i]; }

    Jet& operator+=(const Jet& o) {
        for (int i = 0; i < size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        for (int i = 0; i < size(); ++i) c_[i] -= o.c_[i];
        return *this;
    }
    Jet& operator+=(S v) { c_[0] += v; return *this; }
    Jet& operator-=(S v) { c_[0] -= v; return *this; }
    Jet& operator*=(S v) {
        for (auto& x : c_) x = x * v;
        return *this;
    }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator+(Jet a, S v) { return a += v; }
    friend Jet operator+(S v, Jet a) { return a += v; }
    friend Jet operator-(Jet a, S v) { return a -= v; }
    friend Jet operator-(S v, const Jet& a) {
        Jet r = -a;
        r.c_[0] += v;
        return r;
    }
    friend Jet operator*(Jet a, S v) { return a *= v; }
    friend Jet operator*(S v, Jet a) { return a *= v; }
    friend Jet operator-(const Jet& a) {
        Jet r(a.lay_);
        for (int i = 0; i < a.size(); ++i) r.c_[i] = -a.c_[i];
        return r;
    }

    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r(a.lay_);
        for (const auto& t : a.lay_->product_triples()) {
            r.c_[t.k] += a.c_[t.i] * b.c_[t.j];
        }
        return r;
    }
    Jet& operator*=(const Jet& o) { return *this = *this * o; }

    friend Jet operator/(const Jet& a, const Jet& b) { return a * inverse(b); }
    friend Jet operator/(Jet a, S v) {
        S inv = S(1.0) / v;
        return a *= inv;
    }
    friend Jet operator/(S v, const Jet& b) { return inverse(b) * v; }

private:
    LayoutPtr lay_;
    std::vector<S> c_;
};

// --- univariate composition -------------------------------------------------
//
// Given the Taylor coefficients series[k] = f^(k)(u0)/k! and a jet u with
// u.value() == u0, the composition f(u) truncated at the layout order is the
// Horner evaluation of the series on w = u - u0 (which has zero constant
// term).. order jet multiplications total.
template <class S>
Jet<S> compose_series(std::span<const S> series, const Jet<S>& u) {
    Jet<S> w = u;
    w -= u.value();
    int d = u.order();
    Jet<S> r = Jet<S>::constant(u.layout(), series[d]);
    for (int k = d - 1; k >= 0; --k) {
        r = r * w;
        r += series[k];
    }
    return r;
}

template <class S> Jet<S> inverse(const Jet<S>& u) {
    S u0 = u.value();
    if (abs_val(u0) < 1e-30)
        throw Error(errc::degenerate, "jet division by degenerate value (|c0| < 1e-30)");
    int d = u.order();
    std::vector<S> s(d + 1);
    S p = S(1.0) / u0;
    for (int k = 0; k <= d; ++k) {
        s[k] = p;
        p = -p / u0;
    }
    return compose_series(std::span<const S>(s), u);
}

template <class S> Jet<S> sqrt(const Jet<S>& u) {
    using cma::sqrt;
    S u0 = u.value();
    if (!(to_double(u0) > 0.0))
        throw Error(errc::degenerate, "jet sqrt requires a positive value part");
    int d = u.order();
    std::vector<S> s(d + 1);
    S r = sqrt(u0);
    // binom(1/2, k) * u0^(1/2 - k)
    S coef = r;
    s[0] = coef;
    S b = S(1.0);
    for (int k = 1; k <= d; ++k) {
        b = b * S(0.5 - double(k - 1)) / S(double(k));
        coef = coef / u0;
        s[k] = b * coef;
    }
    return compose_series(std::span<const S>(s), u);
}

template <class S> Jet<S> exp(const Jet<S>& u) {
    using cma::exp;
    int d = u.order();
    std::vector<S> s(d + 1);
    S e = exp(u.value());
    S f = S(1.0);
    for (int k = 0; k <= d; ++k) {
        if (k > 0) f = f / S(double(k));
        s[k] = e * f;
    }
    return compose_series(std::span<const S>(s), u);
}

template <class S> Jet<S> log(const Jet<S>& u) {
    using cma::log;
    S u0 = u.value();
    if (!(to_double(u0) > 0.0))
        throw Error(errc::degenerate, "jet log requires a positive value part");
    int d = u.order();
    std::vector<S> s(d + 1);
    s[0] = log(u0);
    S p = S(1.0);
    for (int k = 1; k <= d; ++k) {
        p = p / u0;
        s[k] = S((k % 2) ? 1.0 : -1.0) * p / S(double(k));
    }
    return compose_series(std::span<const S>(s), u);
}

template <class S> Jet<S> sin(const Jet<S>& u) {
    using cma::cos;
    using cma::sin;
    int d = u.order();
    std::vector<S> s(d + 1);
    S sv = sin(u.value()), cv = cos(u.value());
    S f = S(1.0);
    for (int k = 0; k <= d; ++k) {
        if (k > 0) f = f / S(double(k));
        switch (k % 4) {
            case 0: s[k] = sv * f; break;
            case 1: s[k] = cv * f; break;
            case 2: s[k] = -sv * f; break;
            case 3: s[k] = -cv * f; break;
        }
    }
    return compose_series(std::span<const S>(s), u);
}

template <class S> Jet<S> cos(const Jet<S>& u) {
    using cma::cos;
    using cma::sin;
    int d = u.order();
    std::vector<S> s(d + 1);
    S sv = sin(u.value()), cv = cos(u.value());
    S f = S(1.0);
    for (int k = 0; k <= d; ++k) {
        if (k > 0) f = f / S(double(k));
        switch (k % 4) {
            case 0: s[k] = cv * f; break;
            case 1: s[k] = -sv * f; break;
            case 2: s[k] = -cv * f; break;
            case 3: s[k] = sv * f; break;
        }
    }
    return compose_series(std::span<const S>(s), u);
}

// integer power by binary exponentiation; exact for u with zero value part
template <class S> Jet<S> powi(const Jet<S>& u, long long p) {
    if (p < 0) return inverse(powi(u, -p));
    Jet<S> r = Jet<S>::constant(u.layout(), S(1.0));
    Jet<S> base = u;
    unsigned long long e = (unsigned long long)p;
    while (e) {
        if (e & 1ull) r = r * base;
        base = base * base;
        e >>= 1;
    }
    return r;
}

// --- structural operations ---------------------------------------------------

// Drop coefficients above `order` (graded-lex layouts nest by prefix).
template <class S> Jet<S> truncate(const Jet<S>& u, int order) {
    auto lay = JetLayout::get(u.dim(), order);
    Jet<S> r(lay);
    int n = std::min(r.size(), u.size());
    for (int i = 0; i < n; ++i) r[i] = u[i];
    return r;
}

// Formal partial derivative with respect to variable `var`; order drops by 1.
template <class S> Jet<S> jet_partial(const Jet<S>& u, int var) {
    auto lay = JetLayout::get(u.dim(), u.order() - 1);
    Jet<S> r(lay);
    uint8_t e[JetLayout::kMaxDim];
    for (int i = 0; i < r.size(); ++i) {
        const uint8_t* be = lay->exponents(i);
        for (int v = 0; v < u.dim(); ++v) e[v] = be[v];
        e[var] += 1;
        int src = u.layout()->rank(e);
        r[i] = u[src] * S(double(e[var]));
    }
    return r;
}

template <class S2, class S1> Jet<S2> jet_cast(const Jet<S1>& u) {
    Jet<S2> r(u.layout());
    for (int i = 0; i < u.size(); ++i) r[i] = from_double<S2>(to_double(u[i]));
    return r;
}

// Evaluate a truncated Taylor polynomial T (a double jet over m variables) at
// m jet arguments w_i that must have zero constant term. Used to compose a
// cached field expansion with projection jets.
template <class S>
Jet<S> eval_poly(const Jet<double>& T, std::span<const Jet<S>> w) {
    const auto& tl = *T.layout();
    int m = tl.dim();
    int outOrder = w[0].order();
    auto outLay = w[0].layout();
    // power tables w_i^e
    std::vector<std::vector<Jet<S>>> pw(m);
    for (int i = 0; i < m; ++i) {
        pw[i].push_back(Jet<S>::constant(outLay, S(1.0)));
    }
    Jet<S> r(outLay);
    for (int idx = 0; idx < T.size(); ++idx) {
        double c = T[idx];
        if (c == 0.0) continue;
        if (tl.degree(idx) > outOrder) break; // higher terms vanish on zero-constant args
        const uint8_t* e = tl.exponents(idx);
        Jet<S> term = Jet<S>::constant(outLay, from_double<S>(c));
        for (int i = 0; i < m; ++i) {
            int p = e[i];
            while (int(pw[i].size()) <= p) pw[i].push_back(pw[i].back() * w[i]);
            if (p > 0) term = term * pw[i][p];
        }
        r += term;
    }
    return r;
}

// --- lift --------------------------------------------------------------------

struct JetConfig {
    static constexpr int max_order = JetLayout::kMaxOrder;
};

// One jet per coordinate: value in the constant slot, unit seed on its own axis.
template <class S>
std::vector<Jet<S>> lift_point(std::span<const S> coords, int order) {
    if (order < 0 || order > JetConfig::max_order)
        throw Error(errc::config,
                    "jet order " + std::to_string(order) + " outside [0, " +
                        std::to_string(JetConfig::max_order) + "]");
    int dim = int(coords.size());
    auto lay = JetLayout::get(dim, order);
    std::vector<Jet<S>> out;
    out.reserve(dim);
    for (int i = 0; i < dim; ++i) out.push_back(Jet<S>::variable(lay, i, coords[i]));
    return out;
}

inline std::vector<Jet<double>> lift_point(std::span<const double> coords, int order) {
    return lift_point<double>(coords, order);
}

} // namespace cma
