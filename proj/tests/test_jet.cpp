#include "doctest.h"

#include "cma/jet.hpp"
#include "cma/newton.hpp"

#include <cmath>
#include <random>

using namespace cma;

namespace {

// coefficient lookup by explicit exponents
template <class S> S coef(const Jet<S>& j, std::initializer_list<int> exps) {
    uint8_t e[JetLayout::kMaxDim] = {};
    int i = 0;
    for (int v : exps) e[i++] = uint8_t(v);
    int idx = j.layout()->rank(e);
    REQUIRE(idx >= 0);
    return j[idx];
}

} // namespace

TEST_CASE("lift_point seeds unit coefficients") {
    std::vector<double> p{1.0, 0.0};
    auto js = lift_point(std::span<const double>(p), 2);
    REQUIRE(js.size() == 2);
    CHECK(js[0].value() == 1.0);
    CHECK(coef(js[0], {1, 0}) == 1.0);
    CHECK(coef(js[0], {0, 1}) == 0.0);
    CHECK(coef(js[0], {2, 0}) == 0.0);
    CHECK(coef(js[0], {1, 1}) == 0.0);
    CHECK(js[1].value() == 0.0);
    CHECK(coef(js[1], {0, 1}) == 1.0);
}

TEST_CASE("order-0 lift degenerates to plain evaluation") {
    std::vector<double> p{2.0, 3.0};
    auto js = lift_point(std::span<const double>(p), 0);
    auto r = js[0] * js[1] + js[0];
    CHECK(r.size() == 1);
    CHECK(r.value() == doctest::Approx(8.0));
}

TEST_CASE("exp jet reproduces Taylor coefficients 1/k!") {
    std::vector<double> p{0.0};
    auto js = lift_point(std::span<const double>(p), 6);
    auto e = exp(js[0]);
    double fact = 1.0;
    for (int k = 0; k <= 6; ++k) {
        if (k > 0) fact *= k;
        CHECK(coef(e, {k}) == doctest::Approx(1.0 / fact).epsilon(1e-14));
    }
}

TEST_CASE("log(1+u) gives the Mercator series") {
    std::vector<double> p{0.0};
    auto js = lift_point(std::span<const double>(p), 5);
    auto l = log(js[0] + 1.0);
    CHECK(coef(l, {0}) == doctest::Approx(0.0));
    CHECK(coef(l, {1}) == doctest::Approx(1.0));
    CHECK(coef(l, {2}) == doctest::Approx(-0.5));
    CHECK(coef(l, {3}) == doctest::Approx(1.0 / 3.0));
    CHECK(coef(l, {4}) == doctest::Approx(-0.25));
    CHECK(coef(l, {5}) == doctest::Approx(0.2));
}

TEST_CASE("1/(1-u) gives the geometric series") {
    std::vector<double> p{0.0};
    auto js = lift_point(std::span<const double>(p), 5);
    auto g = 1.0 / (1.0 - js[0]);
    for (int k = 0; k <= 5; ++k) CHECK(coef(g, {k}) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("sqrt at base 4") {
    std::vector<double> p{4.0};
    auto js = lift_point(std::span<const double>(p), 1);
    auto s = sqrt(js[0]);
    CHECK(s.value() == doctest::Approx(2.0));
    CHECK(coef(s, {1}) == doctest::Approx(0.25));
}

TEST_CASE("division by a degenerate jet is rejected") {
    std::vector<double> p{0.0};
    auto js = lift_point(std::span<const double>(p), 3);
    CHECK_THROWS_AS((void)(1.0 / js[0]), Error);
    CHECK_THROWS_AS((void)sqrt(js[0] - 1.0), Error);
    CHECK_THROWS_AS((void)log(js[0]), Error);
}

TEST_CASE("orders beyond the configured maximum are rejected") {
    std::vector<double> p{0.0, 0.0};
    CHECK_THROWS_AS(lift_point(std::span<const double>(p), 9), Error);
    CHECK_THROWS_AS(lift_point(std::span<const double>(p), -1), Error);
}

TEST_CASE("truncation consistency: computing at order d then dropping equals order d-1") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-0.4, 0.4);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> p{0.3 + dist(rng), dist(rng), 1.1 + dist(rng)};
        auto hi = lift_point(std::span<const double>(p), 4);
        auto lo = lift_point(std::span<const double>(p), 3);
        auto f = [](const std::vector<Jet<double>>& v) {
            return exp(v[0] * v[1]) / sqrt(v[2]) + powi(v[0] + v[2], 3) * 0.25;
        };
        auto a = truncate(f(hi), 3);
        auto b = f(lo);
        for (int i = 0; i < b.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-13));
    }
}

TEST_CASE("jet partial derivative shifts coefficients") {
    std::vector<double> p{0.5, -0.25};
    auto js = lift_point(std::span<const double>(p), 4);
    auto f = js[0] * js[0] * js[1]; // x^2 y
    auto fx = jet_partial(f, 0);    // 2xy
    CHECK(fx.value() == doctest::Approx(2.0 * 0.5 * -0.25));
    CHECK(coef(fx, {1, 0}) == doctest::Approx(2.0 * -0.25));
    CHECK(coef(fx, {0, 1}) == doctest::Approx(2.0 * 0.5));
}

TEST_CASE("jet Newton: sqrt expansion via x^2 = 4 + u") {
    // solve x^2 - (4 + u) = 0 for x as a jet in u
    auto paramLay = JetLayout::get(1, 3);
    Jet<double> u = Jet<double>::variable(paramLay, 0, 0.0);
    auto F = [&](std::span<const Jet<double>> st) {
        std::vector<Jet<double>> r;
        const auto& lay = st[0].layout();
        Jet<double> uu = (lay == paramLay) ? u : Jet<double>::constant(lay, 0.0);
        r.push_back(st[0] * st[0] - (uu + 4.0));
        return r;
    };
    auto root = newton_root<double>(F, {1.0});
    CHECK(root[0] == doctest::Approx(2.0));
    auto jets = newton_jets<double>(F, root, paramLay);
    CHECK(jets[0].value() == doctest::Approx(2.0));
    CHECK(coef(jets[0], {1}) == doctest::Approx(0.25));        // d sqrt(4+u)/du = 1/4
    CHECK(coef(jets[0], {2}) == doctest::Approx(-1.0 / 64.0)); // second Taylor coefficient
}

TEST_CASE("jet Newton order 0 reproduces the plain root") {
    auto F = [](std::span<const Jet<double>> st) {
        std::vector<Jet<double>> r;
        r.push_back(st[0] * st[0] * st[0] - 27.0);
        return r;
    };
    auto root = newton_root<double>(F, {2.0});
    CHECK(root[0] == doctest::Approx(3.0).epsilon(1e-12));
    auto lay0 = JetLayout::get(1, 0);
    auto jets = newton_jets<double>(F, root, lay0);
    CHECK(jets[0].value() == doctest::Approx(3.0));
}

TEST_CASE("newton reports non-convergence") {
    auto F = [](std::span<const Jet<double>> st) {
        std::vector<Jet<double>> r;
        r.push_back(st[0] * st[0] + 1.0); // no real root
        return r;
    };
    CHECK_THROWS_AS(newton_root<double>(F, {0.7}), Error);
}

TEST_CASE("eval_poly composes a cached expansion with shifted arguments") {
    // T(w0, w1) = 1 + 2 w0 + 3 w1^2 evaluated at w0 = s^2, w1 = s (jets in s)
    auto tl = JetLayout::get(2, 3);
    Jet<double> T(tl);
    {
        uint8_t e0[2] = {0, 0}, e1[2] = {1, 0}, e2[2] = {0, 2};
        T[tl->rank(e0)] = 1.0;
        T[tl->rank(e1)] = 2.0;
        T[tl->rank(e2)] = 3.0;
    }
    auto sl = JetLayout::get(1, 3);
    Jet<double> s = Jet<double>::variable(sl, 0, 0.0);
    std::vector<Jet<double>> w{s * s, s};
    auto r = eval_poly(T, std::span<const Jet<double>>(w));
    CHECK(coef(r, {0}) == doctest::Approx(1.0));
    CHECK(coef(r, {1}) == doctest::Approx(0.0));
    CHECK(coef(r, {2}) == doctest::Approx(2.0 + 3.0)); // 2 w0 + 3 w1^2 both land on s^2
    CHECK(coef(r, {3}) == doctest::Approx(0.0));
}
