#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cma/expression.hpp"
#include "cma/newton.hpp"

namespace cma {

// A domain presented by a real-analytic defining expression with
// Omega = { expression < 0 }. Sign convention, fixed once for the whole
// artifact: delta > 0 inside Omega, rho = -delta, and the tangential Levi
// block of H(rho) is positive definite on strictly pseudoconvex boundaries.
struct DomainSpec {
    int n = 0;                    // complex dimension (2n real coordinates)
    Expression expr;              // defining expression, real-valued
    double collarWidth = 0.1;     // one-sided tube where jet evaluation is allowed
    std::string catalogId;        // "ball", "ellipsoid", "perturbed-ball" or empty
    double reach = 0.5;           // catalog curvature estimate behind the collar default
    std::vector<Expression> gradAst; // cached d/dz_k expressions

    static DomainSpec from_expression(const std::string& text, int n,
                                      double collar = -1.0);
    static DomainSpec from_parsed(Expression e, int n, double collar, std::string catalogId,
                                  double reach);
    // "ball" | "ellipsoid:a1,...,an" | "perturbed-ball:eps:expr"
    static DomainSpec catalog(const std::string& tag, int n, double collar = -1.0);

    int real_dim() const { return 2 * n; }
};

// numeric defining-function value and real gradient at a real 2n point
double domain_value(const DomainSpec& dom, std::span<const double> pt);
std::vector<double> domain_real_gradient(const DomainSpec& dom, std::span<const double> pt);

// --- signed distance as jets -----------------------------------------------------

template <class S> struct DistanceJets {
    Jet<S> delta;              // signed distance, > 0 inside
    std::vector<Jet<S>> pi;    // boundary projection components (2n real jets)
    std::vector<S> boundary;   // numeric projected point
    S value;                   // numeric delta
};

namespace detail {

template <class S>
std::vector<CJet<S>> complex_coords(std::span<const Jet<S>> re, int n) {
    std::vector<CJet<S>> z;
    z.reserve(n);
    for (int k = 0; k < n; ++k) z.push_back(CJet<S>{re[2 * k], re[2 * k + 1]});
    return z;
}

} // namespace detail

// Newton on the Lagrange system { p - z + mu * grad(e)(p) = 0, e(p) = 0 },
// seeded by gradient-descent steps; the jet phase runs chord iterations over
// the 2n coordinates of z. delta is assembled as (p - z) . nhat(p) with nhat
// the outward unit gradient direction, which stays smooth across the boundary.
template <class S>
DistanceJets<S> signed_distance_jets(const DomainSpec& dom, std::span<const S> zpt, int order,
                                     bool enforceCollar = true,
                                     const double* boundaryHint = nullptr) {
    const int d = dom.real_dim();
    const int m = d + 1; // unknowns: p (2n) and the multiplier

    // descent seed for the boundary point (skipped when the caller knows it)
    std::vector<double> p(d);
    if (boundaryHint) {
        for (int i = 0; i < d; ++i) p[i] = boundaryHint[i];
    } else {
        for (int i = 0; i < d; ++i) p[i] = to_double(zpt[i]);
        bool ok = false;
        for (int iter = 0; iter < 50; ++iter) {
            double e = domain_value(dom, p);
            auto g = domain_real_gradient(dom, p);
            double g2 = 0.0;
            for (double x : g) g2 += x * x;
            if (g2 < 1e-12)
                throw Error(errc::degenerate, "signed distance: degenerate gradient at seed");
            for (int i = 0; i < d; ++i) p[i] -= e * g[i] / g2;
            if (std::abs(e) < 1e-9) { ok = true; if (std::abs(e) < 1e-13) break; }
        }
        if (!ok)
            throw Error(errc::collar,
                        "signed distance: projection seed did not approach the boundary");
    }

    auto paramLay = JetLayout::get(d, order);
    std::vector<Jet<S>> zJets;
    zJets.reserve(d);
    for (int i = 0; i < d; ++i) zJets.push_back(Jet<S>::variable(paramLay, i, zpt[i]));

    auto F = [&](std::span<const Jet<S>> st) -> std::vector<Jet<S>> {
        const auto& lay = st[0].layout();
        const bool chord = (lay == paramLay);
        auto zc = detail::complex_coords(st.subspan(0, d), dom.n);
        Jet<S> e = dom.expr.eval<S>(std::span<const CJet<S>>(zc)).re;
        std::vector<Jet<S>> out;
        out.reserve(m);
        const Jet<S>& mu = st[d];
        for (int k = 0; k < dom.n; ++k) {
            CJet<S> dz = dom.gradAst[k].eval<S>(std::span<const CJet<S>>(zc));
            Jet<S> gx = dz.re * S(2.0);  // de/dx_k = 2 Re d/dz_k
            Jet<S> gy = dz.im * S(-2.0); // de/dy_k = -2 Im d/dz_k
            Jet<S> zx = chord ? zJets[2 * k] : Jet<S>::constant(lay, zpt[2 * k]);
            Jet<S> zy = chord ? zJets[2 * k + 1] : Jet<S>::constant(lay, zpt[2 * k + 1]);
            out.push_back(st[2 * k] - zx + mu * gx);
            out.push_back(st[2 * k + 1] - zy + mu * gy);
        }
        out.push_back(e);
        return out;
    };

    // numeric root
    std::vector<S> guess(m);
    for (int i = 0; i < d; ++i) guess[i] = from_double<S>(p[i]);
    {
        auto g = domain_real_gradient(dom, p);
        double g2 = 0.0, mu0 = 0.0;
        for (int i = 0; i < d; ++i) {
            g2 += g[i] * g[i];
            mu0 += (to_double(zpt[i]) - p[i]) * g[i];
        }
        guess[d] = from_double<S>(mu0 / g2);
    }
    std::vector<S> root;
    try {
        root = newton_root<S>(F, guess);
    } catch (const Error& e) {
        throw Error(errc::collar, std::string("signed distance: projection Newton failed (") +
                                      e.what() + ")");
    }

    // jet phase
    std::vector<Jet<S>> u = (order >= 1) ? newton_jets<S>(F, root, paramLay)
                                         : [&] {
                                               std::vector<Jet<S>> c;
                                               for (int i = 0; i < m; ++i)
                                                   c.push_back(Jet<S>::constant(paramLay, root[i]));
                                               return c;
                                           }();

    // delta = (p - z) . g(p)/|g(p)|  (outward normal; positive inside)
    auto pc = detail::complex_coords(std::span<const Jet<S>>(u.data(), d), dom.n);
    Jet<S> g2j = Jet<S>::constant(paramLay, S(0.0));
    std::vector<Jet<S>> g(d, Jet<S>::constant(paramLay, S(0.0)));
    for (int k = 0; k < dom.n; ++k) {
        CJet<S> dz = dom.gradAst[k].eval<S>(std::span<const CJet<S>>(pc));
        g[2 * k] = dz.re * S(2.0);
        g[2 * k + 1] = dz.im * S(-2.0);
        g2j += g[2 * k] * g[2 * k] + g[2 * k + 1] * g[2 * k + 1];
    }
    Jet<S> ginv = inverse(sqrt(g2j));
    Jet<S> delta = Jet<S>::constant(paramLay, S(0.0));
    for (int i = 0; i < d; ++i) delta += (u[i] - zJets[i]) * g[i];
    delta = delta * ginv;

    DistanceJets<S> out;
    out.delta = std::move(delta);
    out.pi.assign(u.begin(), u.begin() + d);
    out.boundary.assign(root.begin(), root.begin() + d);
    out.value = out.delta.value();

    if (enforceCollar && order >= 1 && std::abs(to_double(out.value)) > dom.collarWidth)
        throw Error(errc::collar, "point outside the collar: |delta| = " +
                                      std::to_string(std::abs(to_double(out.value))) + " > " +
                                      std::to_string(dom.collarWidth));
    return out;
}

// numeric conveniences
double signed_distance(const DomainSpec& dom, std::span<const double> pt);
std::vector<double> boundary_projection(const DomainSpec& dom, std::span<const double> pt);

// --- Levi geometry ------------------------------------------------------------------

// smallest eigenvalue of the tangential block of H(rho), rho = -delta, in the
// normal frame at a boundary point
double levi_min(const DomainSpec& dom, std::span<const double> boundaryPoint);

struct PscReport {
    double minLevi = 0.0;
    std::vector<double> argmin;
    uint64_t seed = 0;
    int samples = 0;
    std::vector<double> values;
};

PscReport pseudoconvexity_report(const DomainSpec& dom, int sampleCount, uint64_t seed = 42);

// deterministic quasi-random boundary points (radial projection of
// low-discrepancy sphere directions; requires the origin interior)
std::vector<std::vector<double>> boundary_samples(const DomainSpec& dom, int count,
                                                  uint64_t seed = 42);

// orthonormal tangent frame of the boundary at p: returns 2n-1 real vectors
// orthogonal to the real normal, Gram-Schmidt from coordinate axes
std::vector<std::vector<double>> tangent_frame(const DomainSpec& dom,
                                               std::span<const double> boundaryPoint);

} // namespace cma
