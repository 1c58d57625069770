#include "doctest.h"

#include "cma/dd.hpp"

#include <cmath>
#include <initializer_list>

using cma::Dd;

namespace {
double err(Dd x, Dd ref) {
    Dd d = x - ref;
    return std::abs(d.hi);
}
} // namespace

TEST_CASE("dd arithmetic hits quad-ish precision") {
    Dd third = Dd(1.0) / Dd(3.0);
    Dd one = third * Dd(3.0);
    CHECK(std::abs((one - Dd(1.0)).hi) < 1e-31);

    Dd r2 = cma::sqrt(Dd(2.0));
    CHECK(err(r2 * r2, Dd(2.0)) < 1e-31);

    // (1 + 1e-15)^2 - 1 - 2e-15 = 1e-30: double loses it, the lo word keeps it
    Dd x = Dd(1.0) + Dd(1e-15);
    Dd y = cma::sqr(x) - Dd(1.0) - Dd(2e-15);
    CHECK(std::abs(y.hi - 1e-30) < 1e-31);
}

TEST_CASE("dd exp and log are mutual inverses") {
    for (double v : {-3.7, -0.5, 0.0, 0.3, 1.0, 4.2, 11.0}) {
        Dd e = cma::exp(Dd(v));
        CHECK(err(cma::log(e), Dd(v)) < 1e-30 * (1.0 + std::abs(v)));
    }
    // exp(1) to 32 digits: 2.7182818284590452353602874713526...
    Dd e1 = cma::exp(Dd(1.0));
    Dd ref{2.718281828459045091e+00, 1.445646891729250158e-16};
    CHECK(err(e1, ref) < 1e-31);
}

TEST_CASE("dd trig basics") {
    Dd s = cma::sin(cma::ddc::half_pi);
    CHECK(err(s, Dd(1.0)) < 1e-30);
    Dd c = cma::cos(cma::ddc::pi);
    CHECK(err(c, Dd(-1.0)) < 1e-30);
    // sin^2 + cos^2 = 1 at an awkward argument
    Dd a(0.77);
    Dd v = cma::sqr(cma::sin(a)) + cma::sqr(cma::cos(a));
    CHECK(err(v, Dd(1.0)) < 1e-29);
}

TEST_CASE("dd integer powers and comparisons") {
    CHECK(err(cma::pow_int(Dd(3.0), 5), Dd(243.0)) == 0.0);
    CHECK(err(cma::pow_int(Dd(2.0), -3), Dd(0.125)) == 0.0);
    CHECK(Dd(1.0) + Dd(1e-25) > Dd(1.0));
    CHECK(cma::abs(Dd(-2.5)) == Dd(2.5));
}
