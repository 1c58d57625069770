#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "cma/cplx.hpp"
#include "cma/error.hpp"

namespace cma {

// Hermitian n x n matrix, row-major complex storage. The operations here are
// the determinant manipulations the flattening recursion is built from:
// symmetry-exploiting determinant, adjugate quadratic form, exact rank-one
// determinant update, normal frames, and the bordered/Schur decomposition.
template <class S> struct HMat {
    int n = 0;
    std::vector<Cx<S>> a;

    HMat() = default;
    explicit HMat(int n_) : n(n_), a(std::size_t(n_) * n_, Cx<S>(S(0.0))) {}

    Cx<S>& at(int i, int j) { return a[std::size_t(i) * n + j]; }
    const Cx<S>& at(int i, int j) const { return a[std::size_t(i) * n + j]; }

    static HMat identity(int n_) {
        HMat m(n_);
        for (int i = 0; i < n_; ++i) m.at(i, i) = Cx<S>(S(1.0));
        return m;
    }
};

using HMatd = HMat<double>;

// --- generic (ring-valued) determinant helpers -------------------------------
//
// Division-free Laplace expansion; T needs +, -, *. Quadratic-size inputs
// only (n <= 6 in practice). Also serves as the brute-force oracle in tests.
template <class T>
T cofactor_det(const std::vector<T>& m, int n) {
    if (n == 1) return m[0];
    std::vector<T> minor;
    minor.reserve(std::size_t(n - 1) * (n - 1));
    bool first = true;
    T det = m[0]; // placeholder; overwritten on first term
    for (int c = 0; c < n; ++c) {
        minor.clear();
        for (int i = 1; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (j != c) minor.push_back(m[std::size_t(i) * n + j]);
        T term = m[c] * cofactor_det(minor, n - 1);
        if (first) {
            det = term;
            first = false;
        } else if (c % 2) {
            det = det - term;
        } else {
            det = det + term;
        }
    }
    return det;
}

// <adj(A) v, v> over an arbitrary commutative ring with a conj() operation.
// adj(A)_{ij} = (-1)^{i+j} det(A with row j and column i removed).
template <class T>
T adjugate_form_ring(const std::vector<T>& m, int n, const std::vector<T>& v) {
    if (n == 1) return conj(v[0]) * v[0]; // adj of a 1x1 is [1]
    std::vector<T> minor;
    minor.reserve(std::size_t(n - 1) * (n - 1));
    bool first = true;
    T acc = m[0];
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            minor.clear();
            for (int r = 0; r < n; ++r) {
                if (r == j) continue;
                for (int c = 0; c < n; ++c)
                    if (c != i) minor.push_back(m[std::size_t(r) * n + c]);
            }
            T term = conj(v[i]) * cofactor_det(minor, n - 1) * v[j];
            bool neg = ((i + j) % 2) != 0;
            if (first) {
                acc = neg ? T(-term) : term;
                first = false;
            } else if (neg) {
                acc = acc - term;
            } else {
                acc = acc + term;
            }
        }
    }
    return acc;
}

// --- eigenvalues --------------------------------------------------------------

// Cyclic Jacobi for Hermitian matrices; returns eigenvalues ascending.
template <class S> std::vector<S> jacobi_eigenvalues(HMat<S> A) {
    using cma::sqrt;
    int n = A.n;
    std::vector<S> eig(n);
    if (n == 1) {
        eig[0] = A.at(0, 0).re;
        return eig;
    }
    double scale = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) scale = std::max(scale, to_double(abs(A.at(i, j))));
    if (scale == 0.0) scale = 1.0;

    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += to_double(norm_sq(A.at(p, q)));
        if (std::sqrt(off) < 1e-14 * scale) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                Cx<S> apq = A.at(p, q);
                double m = to_double(abs(apq));
                if (m < 1e-300) continue;
                Cx<S> phi = apq / abs(apq);
                S app = A.at(p, p).re, aqq = A.at(q, q).re;
                S theta = (aqq - app) / (S(2.0) * abs(apq));
                double th = to_double(theta);
                S t;
                if (th >= 0.0)
                    t = S(1.0) / (theta + sqrt(S(1.0) + theta * theta));
                else
                    t = S(-1.0) / (-theta + sqrt(S(1.0) + theta * theta));
                S c = S(1.0) / sqrt(S(1.0) + t * t);
                S s = t * c;
                // J = diag(1, conj(phi)) . real rotation: J_pp = c, J_pq = s,
                // J_qp = -conj(phi) s, J_qq = conj(phi) c
                for (int k = 0; k < n; ++k) { // A <- A J
                    Cx<S> akp = A.at(k, p), akq = A.at(k, q);
                    A.at(k, p) = akp * c - akq * (conj(phi) * s);
                    A.at(k, q) = akp * s + akq * (conj(phi) * c);
                }
                for (int k = 0; k < n; ++k) { // A <- J* A
                    Cx<S> apk = A.at(p, k), aqk = A.at(q, k);
                    A.at(p, k) = apk * c - aqk * (phi * s);
                    A.at(q, k) = apk * s + aqk * (phi * c);
                }
            }
        }
    }
    for (int i = 0; i < n; ++i) eig[i] = A.at(i, i).re;
    std::sort(eig.begin(), eig.end(), [](S x, S y) { return to_double(x) < to_double(y); });
    return eig;
}

// --- determinant ---------------------------------------------------------------

// LDL^* elimination with symmetric diagonal pivoting; pivots are exactly real,
// so the result is exactly real. Falls back to the Jacobi eigenvalue product
// for the (rare) remaining block whose diagonal degenerates while off-diagonal
// mass survives, e.g. [[0,1],[1,0]].
template <class S> S hermitian_det(HMat<S> A) {
    int n = A.n;
    S det = S(1.0);
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::abs(to_double(A.at(k, k).re));
        for (int r = k + 1; r < n; ++r) {
            double cand = std::abs(to_double(A.at(r, r).re));
            if (cand > best) {
                best = cand;
                piv = r;
            }
        }
        double offmax = 0.0;
        for (int i = k; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                offmax = std::max(offmax, to_double(abs(A.at(i, j))));
        if (best < 1e-8 * offmax) {
            // diagonal pivoting unsafe: finish with eigenvalues of the block
            HMat<S> B(n - k);
            for (int i = k; i < n; ++i)
                for (int j = k; j < n; ++j) B.at(i - k, j - k) = A.at(i, j);
            for (S ev : jacobi_eigenvalues(B)) det = det * ev;
            return det;
        }
        if (piv != k) { // symmetric swap leaves the determinant unchanged
            for (int j = 0; j < n; ++j) std::swap(A.at(k, j), A.at(piv, j));
            for (int i = 0; i < n; ++i) std::swap(A.at(i, k), A.at(i, piv));
        }
        S d = A.at(k, k).re;
        det = det * d;
        if (best == 0.0 && offmax == 0.0) return (k == 0) ? S(0.0) : det * S(0.0);
        for (int i = k + 1; i < n; ++i) {
            Cx<S> lik = A.at(i, k) / d;
            for (int j = k + 1; j <= i; ++j) {
                Cx<S> upd = A.at(i, j) - lik * conj(A.at(j, k));
                A.at(i, j) = upd;
                A.at(j, i) = conj(upd);
            }
            A.at(i, i) = Cx<S>(A.at(i, i).re, S(0.0));
        }
    }
    return det;
}

// <adj(A) v, v>; real for Hermitian A. Equals det(A) * <A^{-1} v, v> when A
// is invertible, and gives the exact rank-one determinant update below.
template <class S> S adjugate_form(const HMat<S>& A, const std::vector<Cx<S>>& v) {
    Cx<S> r = adjugate_form_ring(A.a, A.n, v);
    return r.re;
}

// det(A + c v v*) by the matrix determinant lemma.
template <class S> S det_rank_one_update(const HMat<S>& A, S c, const std::vector<Cx<S>>& v) {
    return hermitian_det(A) + c * adjugate_form(A, v);
}

// --- frames and the bordered decomposition -------------------------------------

// Unitary U whose last column is along the gradient covector d rho. Under the
// U* A U conjugation of the Wirtinger-Hessian matrix [rho_{i jbar}] this puts
// the Levi form of the complex tangent space into the leading block and the
// normal-normal entry into the corner: the first columns' conjugates span the
// complex tangent space, and the conjugate of the last column is the paper's
// normal direction (d delta / d zbar). Phase-fixed (largest-modulus component
// real positive), deterministic Householder construction.
template <class S> std::vector<Cx<S>> normal_frame(const std::vector<Cx<S>>& gradient) {
    using cma::sqrt;
    int n = int(gradient.size());
    S g2 = S(0.0);
    for (const auto& g : gradient) g2 += norm_sq(g);
    if (to_double(g2) < 1e-16) // |gradient| < 1e-8
        throw Error(errc::degenerate, "normal_frame: degenerate gradient");
    S gn = sqrt(g2);
    std::vector<Cx<S>> nu(n);
    for (int i = 0; i < n; ++i) nu[i] = gradient[i] / gn;
    // phase fix on the largest-modulus component
    int jmax = 0;
    for (int j = 1; j < n; ++j)
        if (to_double(norm_sq(nu[j])) > to_double(norm_sq(nu[jmax]))) jmax = j;
    Cx<S> ph = conj(nu[jmax]) / abs(nu[jmax]);
    for (auto& x : nu) x = x * ph;

    // Householder w = nu + phi e_n reflects nu onto -phi e_n; U = P diag(1,..,-phi)
    Cx<S> phi(S(1.0), S(0.0));
    if (to_double(abs(nu[n - 1])) > 0.0) phi = nu[n - 1] / abs(nu[n - 1]);
    std::vector<Cx<S>> w = nu;
    w[n - 1] = w[n - 1] + phi;
    S ww = S(0.0);
    for (const auto& x : w) ww += norm_sq(x);
    S beta = S(2.0) / ww;
    std::vector<Cx<S>> U(std::size_t(n) * n, Cx<S>(S(0.0)));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            Cx<S> p = (i == j) ? Cx<S>(S(1.0)) : Cx<S>(S(0.0));
            p = p - beta * (w[i] * conj(w[j]));
            if (j == n - 1) p = -phi * p;
            U[std::size_t(i) * n + j] = p;
        }
    }
    return U;
}

// U* A U
template <class S>
HMat<S> conjugate_by(const HMat<S>& A, const std::vector<Cx<S>>& U) {
    int n = A.n;
    HMat<S> tmp(n), out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Cx<S> s(S(0.0));
            for (int k = 0; k < n; ++k) s += A.at(i, k) * U[std::size_t(k) * n + j];
            tmp.at(i, j) = s;
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Cx<S> s(S(0.0));
            for (int k = 0; k < n; ++k) s += conj(U[std::size_t(k) * n + i]) * tmp.at(k, j);
            out.at(i, j) = s;
        }
    return out;
}

template <class S> struct SchurSplit {
    std::vector<Cx<S>> frame;        // unitary, last column along the complex normal
    HMat<S> tangential;              // (n-1) x (n-1) block in the frame
    std::vector<Cx<S>> border;       // B, length n-1
    S corner;                        // r_{n nbar}, real
    std::optional<S> schur;          // corner - B* T^{-1} B when T nonsingular
};

// Hermitian positive-pivot solve of T x = b; returns false when T is singular
// to working precision.
template <class S>
bool hermitian_solve(HMat<S> T, std::vector<Cx<S>> b, std::vector<Cx<S>>& x) {
    int n = T.n;
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    // plain complex LU with partial pivoting (small n)
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = to_double(norm_sq(T.at(k, k)));
        for (int r = k + 1; r < n; ++r) {
            double c = to_double(norm_sq(T.at(r, k)));
            if (c > best) {
                best = c;
                piv = r;
            }
        }
        if (best < 1e-28) return false;
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(T.at(k, j), T.at(piv, j));
            std::swap(b[k], b[piv]);
        }
        for (int i = k + 1; i < n; ++i) {
            Cx<S> m = T.at(i, k) / T.at(k, k);
            T.at(i, k) = m;
            for (int j = k + 1; j < n; ++j) T.at(i, j) = T.at(i, j) - m * T.at(k, j);
            b[i] = b[i] - m * b[k];
        }
    }
    x.assign(n, Cx<S>(S(0.0)));
    for (int i = n - 1; i >= 0; --i) {
        Cx<S> s = b[i];
        for (int j = i + 1; j < n; ++j) s = s - T.at(i, j) * x[j];
        x[i] = s / T.at(i, i);
    }
    return true;
}

// Bordered decomposition in the normal frame of `gradient`.
template <class S>
SchurSplit<S> schur_split(const HMat<S>& A, const std::vector<Cx<S>>& gradient) {
    int n = A.n;
    SchurSplit<S> out;
    out.frame = normal_frame(gradient);
    HMat<S> Af = conjugate_by(A, out.frame);
    out.tangential = HMat<S>(n - 1);
    out.border.resize(n - 1);
    for (int i = 0; i < n - 1; ++i) {
        for (int j = 0; j < n - 1; ++j) out.tangential.at(i, j) = Af.at(i, j);
        out.border[i] = Af.at(i, n - 1);
    }
    out.corner = Af.at(n - 1, n - 1).re;
    std::vector<Cx<S>> x;
    if (n == 1) {
        out.schur = out.corner;
    } else if (hermitian_solve(out.tangential, out.border, x)) {
        Cx<S> q(S(0.0));
        for (int i = 0; i < n - 1; ++i) q += conj(out.border[i]) * x[i];
        out.schur = out.corner - q.re;
    }
    return out;
}

} // namespace cma
