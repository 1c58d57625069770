#include "doctest.h"

#include "cma/wirtinger.hpp"

#include <functional>
#include <random>

using namespace cma;

namespace {

struct PolyTerm {
    double c;
    std::array<int, 4> e; // exponents over (x1, y1, x2, y2)
};

std::vector<PolyTerm> random_poly(std::mt19937_64& rng, int maxdeg) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<PolyTerm> terms;
    for (int a = 0; a <= maxdeg; ++a)
        for (int b = 0; a + b <= maxdeg; ++b)
            for (int c = 0; a + b + c <= maxdeg; ++c)
                for (int d = 0; a + b + c + d <= maxdeg; ++d)
                    terms.push_back({0.25 * dist(rng), {a, b, c, d}});
    return terms;
}

double eval_poly_pt(const std::vector<PolyTerm>& P, const std::array<double, 4>& x) {
    double s = 0.0;
    for (const auto& t : P) {
        double v = t.c;
        for (int i = 0; i < 4; ++i)
            for (int k = 0; k < t.e[i]; ++k) v *= x[i];
        s += v;
    }
    return s;
}

Jet<double> eval_poly_jet(const std::vector<PolyTerm>& P, const std::array<double, 4>& x, int order) {
    std::vector<double> coords(x.begin(), x.end());
    auto vars = lift_point(std::span<const double>(coords), order);
    Jet<double> s(vars[0].layout());
    for (const auto& t : P) {
        Jet<double> v = Jet<double>::constant(vars[0].layout(), t.c);
        for (int i = 0; i < 4; ++i)
            if (t.e[i] > 0) v = v * powi(vars[i], t.e[i]);
        s += v;
    }
    return s;
}

} // namespace

TEST_CASE("hessian of |z1|^2 + |z2|^2 is the identity") {
    std::vector<double> p{0.3, -0.7, 1.1, 0.2};
    auto v = lift_point(std::span<const double>(p), 2);
    auto u = v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3];
    auto w = wirtinger(u);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            CHECK(w.hessian.at(i, j).re == doctest::Approx(i == j ? 1.0 : 0.0));
            CHECK(w.hessian.at(i, j).im == doctest::Approx(0.0));
        }
}

TEST_CASE("pluriharmonic Re(z1^2) has zero complex Hessian") {
    std::vector<double> p{0.4, 0.9, -0.3, 0.5};
    auto v = lift_point(std::span<const double>(p), 2);
    auto u = v[0] * v[0] - v[1] * v[1]; // Re((x+iy)^2) = x^2 - y^2
    auto w = wirtinger(u);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(abs(w.hessian.at(i, j)) == doctest::Approx(0.0));
    // the holomorphic Hessian does not vanish
    CHECK(w.holomorphicHessian[0].re == doctest::Approx(1.0));
}

TEST_CASE("|z| at (1,0): gradient (1/2, 0), hessian diag(1/4, 1/2)") {
    std::vector<double> p{1.0, 0.0, 0.0, 0.0};
    auto v = lift_point(std::span<const double>(p), 2);
    auto u = sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]);
    auto w = wirtinger(u);
    CHECK(w.gradient[0].re == doctest::Approx(0.5));
    CHECK(w.gradient[0].im == doctest::Approx(0.0));
    CHECK(abs(w.gradient[1]) == doctest::Approx(0.0));
    CHECK(w.hessian.at(0, 0).re == doctest::Approx(0.25));
    CHECK(w.hessian.at(1, 1).re == doctest::Approx(0.5));
    CHECK(abs(w.hessian.at(0, 1)) == doctest::Approx(0.0));
}

TEST_CASE("product rule at the base point for random polynomial fields") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 5; ++rep) {
        auto F = random_poly(rng, 3);
        auto G = random_poly(rng, 3);
        std::array<double, 4> x{0.2, -0.4, 0.7, 0.1};
        auto jf = eval_poly_jet(F, x, 2);
        auto jg = eval_poly_jet(G, x, 2);
        auto wf = wirtinger(jf);
        auto wg = wirtinger(jg);
        auto wfg = wirtinger(jf * jg);
        for (int i = 0; i < 2; ++i) {
            double er = jf.value() * wg.gradient[i].re + jg.value() * wf.gradient[i].re;
            double ei = jf.value() * wg.gradient[i].im + jg.value() * wf.gradient[i].im;
            CHECK(wfg.gradient[i].re == doctest::Approx(er).epsilon(1e-12));
            CHECK(wfg.gradient[i].im == doctest::Approx(ei).epsilon(1e-12));
        }
    }
}

TEST_CASE("Wirtinger derivatives of a random degree-4 field match finite differences") {
    std::mt19937_64 rng(13);
    auto P = random_poly(rng, 4);
    std::array<double, 4> x{0.15, -0.3, 0.45, 0.25};
    auto u = eval_poly_jet(P, x, 2);
    auto w = wirtinger(u);

    const double h = 1e-5;
    auto at = [&](int var, double off, int var2 = -1, double off2 = 0.0) {
        auto y = x;
        y[var] += off;
        if (var2 >= 0) y[var2] += off2;
        return eval_poly_pt(P, y);
    };
    auto d1 = [&](int var) { return (at(var, h) - at(var, -h)) / (2 * h); };
    auto d2 = [&](int a, int b) {
        if (a == b) return (at(a, h) - 2 * eval_poly_pt(P, x) + at(a, -h)) / (h * h);
        return (at(a, h, b, h) - at(a, h, b, -h) - at(a, -h, b, h) + at(a, -h, b, -h)) /
               (4 * h * h);
    };

    for (int i = 0; i < 2; ++i) {
        double gx = d1(2 * i), gy = d1(2 * i + 1);
        CHECK(w.gradient[i].re == doctest::Approx(0.5 * gx).epsilon(1e-6));
        CHECK(w.gradient[i].im == doctest::Approx(-0.5 * gy).epsilon(1e-6));
        for (int j = 0; j < 2; ++j) {
            double xx = d2(2 * i, 2 * j), yy = d2(2 * i + 1, 2 * j + 1);
            double xy = d2(2 * i, 2 * j + 1), yx = d2(2 * i + 1, 2 * j);
            CHECK(w.hessian.at(i, j).re == doctest::Approx(0.25 * (xx + yy)).epsilon(1e-6));
            CHECK(w.hessian.at(i, j).im == doctest::Approx(0.25 * (xy - yx)).epsilon(1e-6));
        }
    }
}

TEST_CASE("hermiticity is exact as computed") {
    std::mt19937_64 rng(17);
    auto P = random_poly(rng, 4);
    std::array<double, 4> x{0.6, 0.1, -0.2, 0.8};
    auto w = wirtinger(eval_poly_jet(P, x, 2));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            CHECK(w.hessian.at(i, j).re == w.hessian.at(j, i).re);
            CHECK(w.hessian.at(i, j).im == -w.hessian.at(j, i).im);
        }
}

TEST_CASE("conjugate gradient mirrors the gradient for real fields") {
    std::mt19937_64 rng(19);
    auto P = random_poly(rng, 3);
    std::array<double, 4> x{0.3, 0.2, 0.1, -0.5};
    auto w = wirtinger(eval_poly_jet(P, x, 2));
    for (int i = 0; i < 2; ++i) {
        CHECK(w.conjugateGradient[i].re == doctest::Approx(w.gradient[i].re));
        CHECK(w.conjugateGradient[i].im == doctest::Approx(-w.gradient[i].im));
    }
}

TEST_CASE("non-real complex jets are rejected by extraction") {
    std::vector<double> p{0.5, 0.5};
    auto v = lift_point(std::span<const double>(p), 2);
    CJet<double> zc{v[0], v[1]}; // the field "z" itself: not real-valued
    CHECK_THROWS_AS(wirtinger(zc), Error);
}
