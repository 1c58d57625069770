#include "cma/dd.hpp"

#include <array>
#include <cstdio>
#include <ostream>

namespace cma {

namespace {

// 1/k! for the exp/sin/cos Taylor tails, built once in dd arithmetic.
const std::array<Dd, 32>& inv_factorials() {
    static const std::array<Dd, 32> table = [] {
        std::array<Dd, 32> t{};
        Dd f(1.0);
        t[0] = Dd(1.0);
        for (int k = 1; k < 32; ++k) {
            f = f * Dd(double(k));
            t[k] = Dd(1.0) / f;
        }
        return t;
    }();
    return table;
}

} // namespace

Dd sqrt(Dd a) {
    if (a.hi == 0.0 && a.lo == 0.0) return Dd(0.0);
    if (a.hi < 0.0) return Dd(std::numeric_limits<double>::quiet_NaN());
    // One Karp-style correction on the double estimate: sqrt(a) ~ x*a + 0.5*(a - (x*a)^2)*x
    // with x = 1/sqrt(a.hi); the correction is computed in dd.
    double x = 1.0 / std::sqrt(a.hi);
    double ax = a.hi * x;
    Dd r = Dd(ax) + (a - sqr(Dd(ax))) * Dd(x * 0.5);
    // One Newton polish: r = 0.5*(r + a/r)
    r = (r + a / r) * Dd(0.5);
    return r;
}

Dd exp(Dd a) {
    if (a.hi <= -709.0) return Dd(0.0);
    if (a.hi >= 709.0) return Dd(std::numeric_limits<double>::infinity());
    // a = m*ln2 + r, |r| <= ln2/2; exp(r) by Taylor on r/2^9, squared back up
    // via s <- 2s + s^2 on s = exp(.) - 1 to avoid losing the leading 1.
    double m = std::floor(a.hi / ddc::ln2.hi + 0.5);
    Dd r = a - ddc::ln2 * Dd(m);
    r = ldexp(r, -9);
    Dd rk = sqr(r) * Dd(0.5); // r^k / k!, starting at k = 2
    Dd s = r + rk;
    for (int k = 3; k < 24; ++k) {
        rk = rk * r / Dd(double(k));
        s = s + rk;
        if (std::abs(rk.hi) < 1e-35 * std::abs(s.hi) + 1e-320) break;
    }
    for (int i = 0; i < 9; ++i) s = ldexp(s, 1) + sqr(s);
    s = s + Dd(1.0);
    return ldexp(s, int(m));
}

Dd log(Dd a) {
    if (a.hi <= 0.0) return Dd(std::numeric_limits<double>::quiet_NaN());
    // Newton on exp: x_{k+1} = x_k + a*exp(-x_k) - 1, two rounds from double log.
    Dd x(std::log(a.hi));
    x = x + a * exp(-x) - Dd(1.0);
    x = x + a * exp(-x) - Dd(1.0);
    return x;
}

Dd floor(Dd a) {
    double h = std::floor(a.hi);
    if (h != a.hi) return Dd(h);
    double l = std::floor(a.lo);
    return detail::quick_two_sum(h, l);
}

namespace {

// sin/cos Taylor on |r| <= pi/4.
Dd sin_taylor(Dd r) {
    const auto& inv_fact = inv_factorials();
    Dd r2 = sqr(r);
    Dd s = r;
    Dd term = r;
    for (int k = 3; k < 26; k += 2) {
        term = term * r2;
        Dd add = term * inv_fact[k] * Dd((k % 4 == 3) ? -1.0 : 1.0);
        // inv_fact expects the plain power; term holds r^k here.
        s = s + add;
        if (std::abs(add.hi) < 1e-35 * std::abs(s.hi) + 1e-320) break;
    }
    return s;
}

Dd cos_taylor(Dd r) {
    const auto& inv_fact = inv_factorials();
    Dd r2 = sqr(r);
    Dd s(1.0);
    Dd term(1.0);
    for (int k = 2; k < 26; k += 2) {
        term = term * r2;
        Dd add = term * inv_fact[k] * Dd((k % 4 == 2) ? -1.0 : 1.0);
        s = s + add;
        if (std::abs(add.hi) < 1e-35 * std::abs(s.hi) + 1e-320) break;
    }
    return s;
}

} // namespace

Dd sin(Dd a) {
    // reduce mod 2*pi, then quadrant by pi/2
    Dd k = floor(a / ddc::two_pi + Dd(0.5));
    Dd r = a - ddc::two_pi * k;
    int q = int(std::floor(r.hi / ddc::half_pi.hi + 0.5));
    r = r - ddc::half_pi * Dd(double(q));
    switch (((q % 4) + 4) % 4) {
        case 0: return sin_taylor(r);
        case 1: return cos_taylor(r);
        case 2: return -sin_taylor(r);
        default: return -cos_taylor(r);
    }
}

Dd cos(Dd a) { return sin(a + ddc::half_pi); }

Dd pow_int(Dd a, long long p) {
    if (p == 0) return Dd(1.0);
    bool neg = p < 0;
    unsigned long long e = neg ? (unsigned long long)(-p) : (unsigned long long)p;
    Dd base = a;
    Dd r(1.0);
    while (e) {
        if (e & 1ull) r = r * base;
        base = sqr(base);
        e >>= 1;
    }
    return neg ? Dd(1.0) / r : r;
}

std::ostream& operator<<(std::ostream& os, Dd a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g%+.17g", a.hi, a.lo);
    return os << buf;
}

} // namespace cma
