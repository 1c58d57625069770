#pragma once

#include <cmath>
#include <type_traits>

#include "cma/dd.hpp"

namespace cma {

// The numeric kernels are templated over a scalar S that is either plain
// double or the compensated Dd. These shims give templates a uniform
// vocabulary; unqualified calls (sqrt, exp, ...) resolve by ADL for Dd and
// through these using-declarations for double.
using std::cos;
using std::exp;
using std::isfinite;
using std::log;
using std::sin;
using std::sqrt;

inline double to_double(double x) { return x; }
inline double to_double(Dd x) { return x.hi; }

template <class S> inline S from_double(double x) { return S(x); }

inline double abs_val(double x) { return std::fabs(x); }
inline double abs_val(Dd x) { return std::fabs(x.hi); }

inline double pow_int(double a, long long p) {
    if (p == 0) return 1.0;
    bool neg = p < 0;
    unsigned long long e = neg ? (unsigned long long)(-p) : (unsigned long long)p;
    double base = a, r = 1.0;
    while (e) {
        if (e & 1ull) r *= base;
        base *= base;
        e >>= 1;
    }
    return neg ? 1.0 / r : r;
}

template <class S> constexpr double scalar_eps() {
    if constexpr (std::is_same_v<S, Dd>) return 4.93e-32; // 2^-104
    else return 2.22e-16;
}

template <class S> constexpr const char* scalar_name() {
    if constexpr (std::is_same_v<S, Dd>) return "dd";
    else return "double";
}

} // namespace cma
