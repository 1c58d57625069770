#include "doctest.h"

#include "cma/hermitian.hpp"

#include <random>

using namespace cma;

namespace {

std::mt19937_64 g_rng(23);

HMatd random_hermitian(int n) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    HMatd A(n);
    for (int i = 0; i < n; ++i) {
        A.at(i, i) = Cxd(dist(g_rng), 0.0);
        for (int j = i + 1; j < n; ++j) {
            Cxd v(dist(g_rng), dist(g_rng));
            A.at(i, j) = v;
            A.at(j, i) = conj(v);
        }
    }
    return A;
}

std::vector<Cxd> random_cvector(int n) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<Cxd> v(n);
    for (auto& x : v) x = Cxd(dist(g_rng), dist(g_rng));
    return v;
}

// independent oracle for the adjugate form: det(A + v v*) - det(A),
// both determinants through the LDL route
double adjugate_oracle(const HMatd& A, const std::vector<Cxd>& v) {
    HMatd B = A;
    for (int i = 0; i < A.n; ++i)
        for (int j = 0; j < A.n; ++j) B.at(i, j) = B.at(i, j) + v[i] * conj(v[j]);
    return hermitian_det(B) - hermitian_det(A);
}

} // namespace

TEST_CASE("determinant basics") {
    CHECK(hermitian_det(HMatd::identity(3)) == doctest::Approx(1.0));
    HMatd d(2);
    d.at(0, 0) = Cxd(0.25, 0.0);
    d.at(1, 1) = Cxd(0.5, 0.0);
    CHECK(hermitian_det(d) == doctest::Approx(0.125));
}

TEST_CASE("determinant matches cofactor expansion on random 5x5") {
    for (int rep = 0; rep < 20; ++rep) {
        HMatd A = random_hermitian(5);
        double d1 = hermitian_det(A);
        Cxd d2 = cofactor_det(A.a, 5);
        CHECK(std::abs(d2.im) < 1e-12);
        CHECK(d1 == doctest::Approx(d2.re).epsilon(1e-10));
    }
}

TEST_CASE("determinant of an off-diagonal matrix takes the eigen fallback") {
    HMatd A(2);
    A.at(0, 1) = Cxd(1.0, 0.0);
    A.at(1, 0) = Cxd(1.0, 0.0);
    CHECK(hermitian_det(A) == doctest::Approx(-1.0));
}

TEST_CASE("adjugate form basics") {
    HMatd I3 = HMatd::identity(3);
    auto v = random_cvector(3);
    double n2 = 0.0;
    for (const auto& x : v) n2 += norm_sq(x);
    CHECK(adjugate_form(I3, v) == doctest::Approx(n2).epsilon(1e-12));

    HMatd d(2);
    d.at(0, 0) = Cxd(3.0, 0.0);
    d.at(1, 1) = Cxd(7.0, 0.0);
    std::vector<Cxd> e2{Cxd(0.0, 0.0), Cxd(1.0, 0.0)};
    CHECK(adjugate_form(d, e2) == doctest::Approx(3.0));
}

TEST_CASE("adjugate form against the rank-one determinant oracle, random 4x4") {
    for (int rep = 0; rep < 20; ++rep) {
        HMatd A = random_hermitian(4);
        auto v = random_cvector(4);
        double lhs = adjugate_form(A, v);
        double rhs = adjugate_oracle(A, v);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("adjugate form equals det(A) <A^-1 v, v> for invertible A") {
    for (int rep = 0; rep < 10; ++rep) {
        HMatd A = random_hermitian(4);
        if (std::abs(hermitian_det(A)) < 1e-2) continue;
        auto v = random_cvector(4);
        std::vector<Cxd> x;
        REQUIRE(hermitian_solve(A, v, x));
        Cxd q(0.0, 0.0);
        for (int i = 0; i < 4; ++i) q += conj(v[i]) * x[i];
        CHECK(adjugate_form(A, v) == doctest::Approx(hermitian_det(A) * q.re).epsilon(1e-9));
    }
}

TEST_CASE("matrix determinant lemma: examples and 200 random instances") {
    HMatd I2 = HMatd::identity(2);
    std::vector<Cxd> e1{Cxd(1.0, 0.0), Cxd(0.0, 0.0)};
    CHECK(det_rank_one_update(I2, 0.0, e1) == doctest::Approx(1.0));
    CHECK(det_rank_one_update(I2, 3.0, e1) == doctest::Approx(4.0));

    for (int n = 2; n <= 5; ++n) {
        for (int rep = 0; rep < 50; ++rep) {
            HMatd A = random_hermitian(n);
            auto v = random_cvector(n);
            std::uniform_real_distribution<double> dist(-2.0, 2.0);
            double c = dist(g_rng);
            double lhs = det_rank_one_update(A, c, v);
            HMatd B = A;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) B.at(i, j) = B.at(i, j) + c * (v[i] * conj(v[j]));
            double rhs = hermitian_det(B);
            double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-30});
            CHECK(std::abs(lhs - rhs) / scale < 1e-10);
        }
    }
}

TEST_CASE("normal frame: axis cases and unitarity") {
    // gradient along e_n: frame is the identity up to phase, last column real positive
    std::vector<Cxd> gn{Cxd(0.0, 0.0), Cxd(0.0, 2.0)};
    auto U = normal_frame(gn);
    CHECK(std::abs(U[1 * 2 + 1].im) < 1e-14);
    CHECK(U[1 * 2 + 1].re > 0.0);
    CHECK(abs(U[0 * 2 + 1]) < 1e-14);

    // gradient along e_1: permutation-type unitary swapping axes 1 and n
    std::vector<Cxd> g1{Cxd(1.0, 0.0), Cxd(0.0, 0.0)};
    auto U2 = normal_frame(g1);
    CHECK(std::abs(abs(U2[0 * 2 + 1]) - 1.0) < 1e-14); // last column = e_1 direction
    CHECK(abs(U2[1 * 2 + 1]) < 1e-14);

    // random gradient: U*U = I and determinant invariance under conjugation
    for (int rep = 0; rep < 10; ++rep) {
        int n = 4;
        auto g = random_cvector(n);
        auto Ur = normal_frame(g);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Cxd s(0.0, 0.0);
                for (int k = 0; k < n; ++k) s += conj(Ur[k * n + i]) * Ur[k * n + j];
                CHECK(std::abs(s.re - (i == j ? 1.0 : 0.0)) < 1e-12);
                CHECK(std::abs(s.im) < 1e-12);
            }
        HMatd A = random_hermitian(n);
        HMatd Af = conjugate_by(A, Ur);
        CHECK(hermitian_det(Af) == doctest::Approx(hermitian_det(A)).epsilon(1e-12));
    }
}

TEST_CASE("degenerate gradient is rejected") {
    std::vector<Cxd> g{Cxd(1e-9, 0.0), Cxd(0.0, 0.0)};
    CHECK_THROWS_AS(normal_frame(g), Error);
}

TEST_CASE("schur split: diagonal case, sphere case, random identity check") {
    // diagonal A with gradient along e_n: border 0, schur = corner
    HMatd d(3);
    d.at(0, 0) = Cxd(2.0, 0.0);
    d.at(1, 1) = Cxd(3.0, 0.0);
    d.at(2, 2) = Cxd(5.0, 0.0);
    std::vector<Cxd> gn{Cxd(0.0, 0.0), Cxd(0.0, 0.0), Cxd(1.0, 0.0)};
    auto sp = schur_split(d, gn);
    CHECK(abs(sp.border[0]) < 1e-14);
    CHECK(abs(sp.border[1]) < 1e-14);
    CHECK(sp.corner == doctest::Approx(5.0));
    REQUIRE(sp.schur.has_value());
    CHECK(*sp.schur == doctest::Approx(5.0));

    // the sphere Hessian at (1,0) with rho = |z| - 1: H = diag(1/4, 1/2), grad = (1/2, 0)
    HMatd H(2);
    H.at(0, 0) = Cxd(0.25, 0.0);
    H.at(1, 1) = Cxd(0.5, 0.0);
    std::vector<Cxd> grad{Cxd(0.5, 0.0), Cxd(0.0, 0.0)};
    auto ss = schur_split(H, grad);
    CHECK(ss.tangential.at(0, 0).re == doctest::Approx(0.5));
    CHECK(abs(ss.border[0]) < 1e-14);
    CHECK(ss.corner == doctest::Approx(0.25));

    // random: det(tangential) * schur = det(A)
    for (int rep = 0; rep < 20; ++rep) {
        HMatd A = random_hermitian(4);
        auto g = random_cvector(4);
        auto s = schur_split(A, g);
        if (!s.schur) continue;
        double lhs = hermitian_det(s.tangential) * (*s.schur);
        double rhs = hermitian_det(A);
        double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-30});
        CHECK(std::abs(lhs - rhs) / scale < 1e-10);
    }
}

TEST_CASE("schur split reassembles the original matrix") {
    HMatd A = random_hermitian(3);
    auto g = random_cvector(3);
    auto s = schur_split(A, g);
    // rebuild the framed matrix and undo the conjugation
    HMatd Af(3);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) Af.at(i, j) = s.tangential.at(i, j);
        Af.at(i, 2) = s.border[i];
        Af.at(2, i) = conj(s.border[i]);
    }
    Af.at(2, 2) = Cxd(s.corner, 0.0);
    // A == U Af U*: conjugate Af by U* (i.e. swap roles)
    int n = 3;
    std::vector<Cxd> Ust(std::size_t(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) Ust[std::size_t(i) * n + j] = conj(s.frame[std::size_t(j) * n + i]);
    HMatd back = conjugate_by(Af, Ust);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            CHECK(back.at(i, j).re == doctest::Approx(A.at(i, j).re).epsilon(1e-12));
            CHECK(back.at(i, j).im == doctest::Approx(A.at(i, j).im).epsilon(1e-12));
        }
}

TEST_CASE("jacobi eigenvalues: known spectra and PSD detection") {
    HMatd A(2);
    A.at(0, 0) = Cxd(2.0, 0.0);
    A.at(0, 1) = Cxd(0.0, 1.0);
    A.at(1, 0) = Cxd(0.0, -1.0);
    A.at(1, 1) = Cxd(2.0, 0.0);
    auto ev = jacobi_eigenvalues(A);
    CHECK(ev[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ev[1] == doctest::Approx(3.0).epsilon(1e-12));

    for (int rep = 0; rep < 10; ++rep) {
        HMatd R = random_hermitian(4);
        // R*R is PSD with eigenvalues = squares
        HMatd S(4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                Cxd acc(0.0, 0.0);
                for (int k = 0; k < 4; ++k) acc += R.at(i, k) * R.at(k, j);
                S.at(i, j) = acc;
            }
        auto evs = jacobi_eigenvalues(S);
        for (double e : evs) CHECK(e >= -1e-12);
        auto evr = jacobi_eigenvalues(R);
        std::vector<double> sq;
        for (double e : evr) sq.push_back(e * e);
        std::sort(sq.begin(), sq.end());
        for (int i = 0; i < 4; ++i) CHECK(evs[i] == doctest::Approx(sq[i]).epsilon(1e-9));
    }
}
