#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>

namespace cma {

// Compensated double-double scalar: an unevaluated sum hi + lo with
// |lo| <= ulp(hi)/2, giving ~31 significant decimal digits. Used by the
// flattening ladders at levels where det H cancels past double precision.
//
// The arithmetic kernels are the classic Dekker/Knuth error-free transforms;
// two_prod relies on hardware FMA via std::fma. Compile with
// -ffp-contract=off so the compiler does not re-fuse the compensated sums.
struct Dd {
    double hi = 0.0;
    double lo = 0.0;

    constexpr Dd() = default;
    constexpr Dd(double h) : hi(h), lo(0.0) {}
    constexpr Dd(double h, double l) : hi(h), lo(l) {}

    explicit operator double() const { return hi; }
};

namespace detail {

inline Dd quick_two_sum(double a, double b) {
    // requires |a| >= |b|
    double s = a + b;
    return {s, b - (s - a)};
}

inline Dd two_sum(double a, double b) {
    double s = a + b;
    double v = s - a;
    return {s, (a - (s - v)) + (b - v)};
}

inline Dd two_prod(double a, double b) {
    double p = a * b;
    return {p, std::fma(a, b, -p)};
}

} // namespace detail

inline Dd operator+(Dd a, Dd b) {
    Dd s = detail::two_sum(a.hi, b.hi);
    Dd t = detail::two_sum(a.lo, b.lo);
    s.lo += t.hi;
    s = detail::quick_two_sum(s.hi, s.lo);
    s.lo += t.lo;
    return detail::quick_two_sum(s.hi, s.lo);
}

inline Dd operator-(Dd a) { return {-a.hi, -a.lo}; }
inline Dd operator-(Dd a, Dd b) { return a + (-b); }

inline Dd operator*(Dd a, Dd b) {
    Dd p = detail::two_prod(a.hi, b.hi);
    p.lo += a.hi * b.lo + a.lo * b.hi;
    return detail::quick_two_sum(p.hi, p.lo);
}

inline Dd operator/(Dd a, Dd b) {
    double q1 = a.hi / b.hi;
    Dd r = a - b * Dd(q1);
    double q2 = r.hi / b.hi;
    r = r - b * Dd(q2);
    double q3 = r.hi / b.hi;
    Dd q = detail::quick_two_sum(q1, q2);
    return q + Dd(q3);
}

inline Dd& operator+=(Dd& a, Dd b) { a = a + b; return a; }
inline Dd& operator-=(Dd& a, Dd b) { a = a - b; return a; }
inline Dd& operator*=(Dd& a, Dd b) { a = a * b; return a; }
inline Dd& operator/=(Dd& a, Dd b) { a = a / b; return a; }

inline Dd operator+(Dd a, double b) { return a + Dd(b); }
inline Dd operator+(double a, Dd b) { return Dd(a) + b; }
inline Dd operator-(Dd a, double b) { return a - Dd(b); }
inline Dd operator-(double a, Dd b) { return Dd(a) - b; }
inline Dd operator*(Dd a, double b) { return a * Dd(b); }
inline Dd operator*(double a, Dd b) { return Dd(a) * b; }
inline Dd operator/(Dd a, double b) { return a / Dd(b); }
inline Dd operator/(double a, Dd b) { return Dd(a) / b; }

inline bool operator==(Dd a, Dd b) { return a.hi == b.hi && a.lo == b.lo; }
inline bool operator!=(Dd a, Dd b) { return !(a == b); }
inline bool operator<(Dd a, Dd b) { return a.hi < b.hi || (a.hi == b.hi && a.lo < b.lo); }
inline bool operator>(Dd a, Dd b) { return b < a; }
inline bool operator<=(Dd a, Dd b) { return !(b < a); }
inline bool operator>=(Dd a, Dd b) { return !(a < b); }

inline Dd abs(Dd a) { return a.hi < 0.0 || (a.hi == 0.0 && a.lo < 0.0) ? -a : a; }
inline bool isfinite(Dd a) { return std::isfinite(a.hi) && std::isfinite(a.lo); }

inline Dd ldexp(Dd a, int k) { return {std::ldexp(a.hi, k), std::ldexp(a.lo, k)}; }

inline Dd sqr(Dd a) {
    Dd p = detail::two_prod(a.hi, a.hi);
    p.lo += 2.0 * a.hi * a.lo;
    return detail::quick_two_sum(p.hi, p.lo);
}

Dd sqrt(Dd a);
Dd exp(Dd a);
Dd log(Dd a);
Dd sin(Dd a);
Dd cos(Dd a);
Dd pow_int(Dd a, long long p);
Dd floor(Dd a);

namespace ddc {
// Frequently used constants, hi/lo pairs.
inline constexpr Dd ln2{6.931471805599452862e-01, 2.319046813846299558e-17};
inline constexpr Dd pi{3.141592653589793116e+00, 1.224646799147353207e-16};
inline constexpr Dd two_pi{6.283185307179586232e+00, 2.449293598294706414e-16};
inline constexpr Dd half_pi{1.570796326794896558e+00, 6.123233995736766036e-17};
} // namespace ddc

std::ostream& operator<<(std::ostream& os, Dd a);

} // namespace cma
