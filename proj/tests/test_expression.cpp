#include "doctest.h"

#include "cma/expression.hpp"

#include <random>

using namespace cma;

namespace {
Cxd at(const Expression& e, std::initializer_list<Cxd> zs) {
    std::vector<Cxd> z(zs);
    return e.eval_point(z);
}
} // namespace

TEST_CASE("unit sphere expression at a boundary point") {
    auto e = Expression::parse("abs2(z1) + abs2(z2) - 1", 2);
    auto v = at(e, {Cxd(1.0, 0.0), Cxd(0.0, 0.0)});
    CHECK(v.re == doctest::Approx(0.0));
    CHECK(v.im == doctest::Approx(0.0));
    auto w = at(e, {Cxd(0.6, 0.0), Cxd(0.0, 0.8)});
    CHECK(w.re == doctest::Approx(0.0));
}

TEST_CASE("ellipsoid boundary point") {
    auto e = Expression::parse("abs2(z1)/4 + abs2(z2) - 1", 2);
    auto v = at(e, {Cxd(2.0, 0.0), Cxd(0.0, 0.0)});
    CHECK(v.re == doctest::Approx(0.0));
}

TEST_CASE("realness validation rejects z1") {
    auto e = Expression::parse("z1", 2);
    CHECK_THROWS_AS(e.validate_real(), Error);
    auto ok = Expression::parse("z1 + conj(z1)", 2);
    CHECK_NOTHROW(ok.validate_real());
}

TEST_CASE("syntax errors carry positions") {
    CHECK_THROWS_AS(Expression::parse("abs2(z1", 2), SyntaxError);
    CHECK_THROWS_AS(Expression::parse("abs2(z1) + ", 2), SyntaxError);
    CHECK_THROWS_AS(Expression::parse("z3", 2), SyntaxError);    // index out of range
    CHECK_THROWS_AS(Expression::parse("-z1 + 1", 2), SyntaxError); // no unary minus in the grammar
    try {
        Expression::parse("abs2(z1) @ 2", 2);
        CHECK(false);
    } catch (const SyntaxError& se) {
        CHECK(se.position() == 9);
    }
}

TEST_CASE("precedence and power binding") {
    auto e = Expression::parse("2 + 3 * 4", 1);
    CHECK(at(e, {Cxd(0.0, 0.0)}).re == doctest::Approx(14.0));
    auto p = Expression::parse("(z1 + conj(z1))^3", 1);
    CHECK(at(p, {Cxd(0.5, 0.7)}).re == doctest::Approx(1.0));
    // powers do not chain: factor := base ('^' integer)?
    CHECK_THROWS_AS(Expression::parse("2^3^1", 1), SyntaxError);
}

TEST_CASE("negative integer exponents") {
    auto e = Expression::parse("(1 + abs2(z1))^-2", 1);
    auto v = at(e, {Cxd(1.0, 0.0)});
    CHECK(v.re == doctest::Approx(0.25));
}

TEST_CASE("exp and log round trip on real sub-expressions") {
    auto e = Expression::parse("log(exp(abs2(z1)))", 1);
    auto v = at(e, {Cxd(0.3, 0.4)});
    CHECK(v.re == doctest::Approx(0.25));
    // log of a genuinely complex sub-expression is rejected at evaluation
    auto bad = Expression::parse("log(z1)", 1);
    CHECK_THROWS_AS(at(bad, {Cxd(0.5, 0.5)}), Error);
}

TEST_CASE("evaluation on jets matches closed forms") {
    auto e = Expression::parse("abs2(z1) + abs2(z2) - 1", 2);
    std::vector<double> p{0.3, -0.2, 0.5, 0.1};
    auto vars = lift_point(std::span<const double>(p), 2);
    std::vector<CJet<double>> z{{vars[0], vars[1]}, {vars[2], vars[3]}};
    auto j = e.eval<double>(std::span<const CJet<double>>(z));
    CHECK(im_magnitude(j) == 0.0); // exact cancellation for symmetric products
    CHECK(j.re.value() == doctest::Approx(0.09 + 0.04 + 0.25 + 0.01 - 1.0));
    auto w = wirtinger(j);
    CHECK(w.hessian.at(0, 0).re == doctest::Approx(1.0));
    CHECK(w.hessian.at(1, 1).re == doctest::Approx(1.0));
    CHECK(abs(w.hessian.at(0, 1)) == doctest::Approx(0.0));
}

TEST_CASE("symbolic Wirtinger derivatives match finite differences") {
    auto e = Expression::parse("exp(abs2(z1)/2) + abs2(z2)*abs2(z1) - 3", 2);
    auto dz1 = e.diff_z(0);
    auto dzb2 = e.diff_zbar(1);

    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> dist(-0.7, 0.7);
    for (int rep = 0; rep < 8; ++rep) {
        std::vector<Cxd> z{Cxd(dist(rng), dist(rng)), Cxd(dist(rng), dist(rng))};
        const double h = 1e-6;
        auto shift = [&](int k, Cxd dz) {
            auto zz = z;
            zz[k] = zz[k] + dz;
            return e.eval_point(zz);
        };
        // d/dz = (d/dx - i d/dy)/2 applied to the (real) field
        double fx = (shift(0, Cxd(h, 0.0)).re - shift(0, Cxd(-h, 0.0)).re) / (2 * h);
        double fy = (shift(0, Cxd(0.0, h)).re - shift(0, Cxd(0.0, -h)).re) / (2 * h);
        Cxd d1 = dz1.eval_point(z);
        CHECK(d1.re == doctest::Approx(0.5 * fx).epsilon(1e-5));
        CHECK(d1.im == doctest::Approx(-0.5 * fy).epsilon(1e-5));
        // for real fields, d/dzbar_k = conj(d/dz_k)
        Cxd d2 = dzb2.eval_point(z);
        Cxd d2c = e.diff_z(1).eval_point(z);
        CHECK(d2.re == doctest::Approx(d2c.re).epsilon(1e-12));
        CHECK(d2.im == doctest::Approx(-d2c.im).epsilon(1e-12));
    }
}

TEST_CASE("holomorphy detection") {
    CHECK(Expression::parse("z1*z2 + z1^3 - 2", 2).is_holomorphic());
    CHECK(!Expression::parse("abs2(z1)", 2).is_holomorphic());
    CHECK(!Expression::parse("conj(z2)", 2).is_holomorphic());
}

TEST_CASE("unitary substitution preserves realness and values") {
    auto e = Expression::parse("abs2(z1) + abs2(z2) - 1", 2);
    // a fixed unitary: [[c, s], [-s, c]] with a phase twist
    double c = 0.6, s = 0.8;
    std::vector<Cxd> U{Cxd(c, 0.0), Cxd(0.0, s), Cxd(0.0, s), Cxd(c, 0.0)};
    auto r = e.substitute_linear(U);
    CHECK_NOTHROW(r.validate_real());
    // |Uz|^2 = |z|^2 for unitary U
    std::vector<Cxd> z{Cxd(0.3, -0.1), Cxd(0.2, 0.5)};
    CHECK(r.eval_point(z).re == doctest::Approx(e.eval_point(z).re).epsilon(1e-12));
}

TEST_CASE("dd evaluation agrees with double evaluation") {
    auto e = Expression::parse("exp(abs2(z1)) + abs2(z2)^2 - 2", 2);
    std::vector<Cxd> zd{Cxd(0.3, 0.2), Cxd(-0.4, 0.1)};
    std::vector<Cx<Dd>> zq;
    for (auto& z : zd) zq.push_back(Cx<Dd>::from_std({z.re, z.im}));
    auto vd = e.eval<double>(std::span<const Cxd>(zd));
    auto vq = e.eval<Dd>(std::span<const Cx<Dd>>(zq));
    CHECK(to_double(vq.re) == doctest::Approx(vd.re).epsilon(1e-14));
}

TEST_CASE("profile grammar in t") {
    auto f = Expression::parse_in_t("t^2 + 1 - t");
    std::vector<Cxd> t{Cxd(0.5, 0.0)};
    CHECK(f.eval_point(t).re == doctest::Approx(0.75));
    CHECK_THROWS_AS(Expression::parse_in_t("z1"), SyntaxError);
}
