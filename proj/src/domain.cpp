#include "cma/domain.hpp"

#include <cmath>
#include <sstream>

#include "cma/parallel.hpp"
#include "cma/sampling.hpp"

namespace cma {

namespace {

std::vector<Cxd> to_complex(std::span<const double> pt, int n) {
    std::vector<Cxd> z(n);
    for (int k = 0; k < n; ++k) z[k] = Cxd(pt[2 * k], pt[2 * k + 1]);
    return z;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        auto next = s.find(sep, pos);
        if (next == std::string::npos) {
            out.push_back(s.substr(pos));
            break;
        }
        out.push_back(s.substr(pos, next - pos));
        pos = next + 1;
    }
    return out;
}

} // namespace

DomainSpec DomainSpec::from_parsed(Expression e, int n, double collar, std::string catalogId,
                                   double reach) {
    DomainSpec d;
    d.n = n;
    d.expr = std::move(e);
    d.catalogId = std::move(catalogId);
    d.reach = reach;
    d.collarWidth = collar > 0.0 ? collar : 0.2 * reach;
    d.expr.validate_real();
    for (int k = 0; k < n; ++k) d.gradAst.push_back(d.expr.diff_z(k));

    // gradient must not degenerate on the sampled boundary
    try {
        auto pts = boundary_samples(d, 16);
        for (const auto& p : pts) {
            auto g = domain_real_gradient(d, p);
            double g2 = 0.0;
            for (double x : g) g2 += x * x;
            if (std::sqrt(g2) < 1e-6)
                throw Error(errc::degenerate,
                            "defining expression has a near-zero gradient on the boundary");
        }
    } catch (const Error& err) {
        if (err.code() == errc::degenerate) throw;
        // boundary sampling may legitimately fail for exotic expressions used
        // in tests (origin not interior); the jet ops will surface it later
    }
    return d;
}

DomainSpec DomainSpec::from_expression(const std::string& text, int n, double collar) {
    return from_parsed(Expression::parse(text, n), n, collar > 0 ? collar : 0.1, "", 0.5);
}

DomainSpec DomainSpec::catalog(const std::string& tag, int n, double collar) {
    if (tag == "ball") {
        std::ostringstream os;
        for (int i = 1; i <= n; ++i) os << (i > 1 ? " + " : "") << "abs2(z" << i << ")";
        os << " - 1";
        return from_parsed(Expression::parse(os.str(), n), n, collar, "ball", 1.0);
    }
    if (tag.rfind("ellipsoid:", 0) == 0) {
        auto parts = split(tag.substr(10), ',');
        if (int(parts.size()) != n)
            throw Error(errc::config, "ellipsoid catalog tag needs " + std::to_string(n) +
                                          " semi-axes");
        std::vector<double> a(n);
        double amin = 1e300, amax = 0.0;
        std::ostringstream os;
        for (int i = 0; i < n; ++i) {
            a[i] = std::strtod(parts[i].c_str(), nullptr);
            if (!(a[i] > 0.0)) throw Error(errc::config, "ellipsoid semi-axes must be positive");
            amin = std::min(amin, a[i]);
            amax = std::max(amax, a[i]);
            os << (i ? " + " : "") << "abs2(z" << i + 1 << ")/" << a[i] * a[i];
        }
        os << " - 1";
        return from_parsed(Expression::parse(os.str(), n), n, collar, "ellipsoid",
                           amin * amin / amax);
    }
    if (tag.rfind("perturbed-ball:", 0) == 0) {
        auto rest = tag.substr(15);
        auto colon = rest.find(':');
        if (colon == std::string::npos)
            throw Error(errc::config, "perturbed-ball tag format: perturbed-ball:eps:expr");
        double eps = std::strtod(rest.substr(0, colon).c_str(), nullptr);
        std::string etext = rest.substr(colon + 1);
        std::ostringstream os;
        for (int i = 1; i <= n; ++i) os << (i > 1 ? " + " : "") << "abs2(z" << i << ")";
        os << " - 1";
        Expression ball = Expression::parse(os.str(), n);
        Expression pert = Expression::parse(etext, n);
        Expression total =
            Expression::add(ball, Expression::mul(Expression::number(eps, n), pert));
        DomainSpec d = from_parsed(std::move(total), n, collar, "perturbed-ball", 0.5);
        auto rep = pseudoconvexity_report(d, 64);
        if (!(rep.minLevi > 0.0))
            throw Error(errc::degenerate,
                        "perturbed ball is not strictly pseudoconvex on sampled boundary (min "
                        "Levi eigenvalue " +
                            std::to_string(rep.minLevi) + ")");
        return d;
    }
    throw Error(errc::config, "unknown domain catalog tag: " + tag);
}

double domain_value(const DomainSpec& dom, std::span<const double> pt) {
    auto z = to_complex(pt, dom.n);
    return dom.expr.eval_point(z).re;
}

std::vector<double> domain_real_gradient(const DomainSpec& dom, std::span<const double> pt) {
    auto z = to_complex(pt, dom.n);
    std::vector<double> g(dom.real_dim());
    for (int k = 0; k < dom.n; ++k) {
        Cxd d = dom.gradAst[k].eval_point(z);
        g[2 * k] = 2.0 * d.re;
        g[2 * k + 1] = -2.0 * d.im;
    }
    return g;
}

double signed_distance(const DomainSpec& dom, std::span<const double> pt) {
    auto dj = signed_distance_jets<double>(dom, pt, 0, false);
    return to_double(dj.value);
}

std::vector<double> boundary_projection(const DomainSpec& dom, std::span<const double> pt) {
    auto dj = signed_distance_jets<double>(dom, pt, 0, false);
    return dj.boundary;
}

double levi_min(const DomainSpec& dom, std::span<const double> boundaryPoint) {
    {
        double e = domain_value(dom, boundaryPoint);
        auto g = domain_real_gradient(dom, boundaryPoint);
        double gn = 0.0;
        for (double x : g) gn += x * x;
        gn = std::sqrt(gn);
        if (gn < 1e-6) throw Error(errc::degenerate, "levi_min: degenerate gradient");
        if (std::abs(e) / gn > 1e-8)
            throw Error(errc::collar, "levi_min: point is not on the boundary");
    }
    auto dj = signed_distance_jets<double>(dom, boundaryPoint, 2, false);
    Jet<double> rho = -dj.delta;
    auto w = wirtinger(rho);
    if (dom.n == 1) return 0.0; // no tangential block in C^1
    auto sp = schur_split(w.hessian, w.gradient);
    auto ev = jacobi_eigenvalues(sp.tangential);
    return ev.front();
}

std::vector<std::vector<double>> boundary_samples(const DomainSpec& dom, int count,
                                                  uint64_t seed) {
    const int d = dom.real_dim();
    std::vector<double> origin(d, 0.0);
    double e0 = domain_value(dom, origin);
    if (!(e0 < 0.0))
        throw Error(errc::collar,
                    "boundary sampling requires the origin in the interior of the domain");
    auto dirs = sphere_directions(d, count, seed);
    std::vector<std::vector<double>> out(count);
    parallel_for(count, [&](int i) {
        const auto& u = dirs[i];
        std::vector<double> pt(d);
        auto value_at = [&](double t) {
            for (int j = 0; j < d; ++j) pt[j] = t * u[j];
            return domain_value(dom, pt);
        };
        double lo = 0.0, hi = 1.0;
        double vhi = value_at(hi);
        int guard = 0;
        while (vhi < 0.0 && guard++ < 60) {
            hi *= 1.5;
            vhi = value_at(hi);
        }
        if (vhi < 0.0) throw Error(errc::degenerate, "boundary sampling: unbounded ray");
        for (int it = 0; it < 100; ++it) {
            double mid = 0.5 * (lo + hi);
            if (value_at(mid) < 0.0) lo = mid;
            else hi = mid;
        }
        double t = 0.5 * (lo + hi);
        // Newton polish along the ray
        for (int it = 0; it < 4; ++it) {
            for (int j = 0; j < d; ++j) pt[j] = t * u[j];
            double e = domain_value(dom, pt);
            auto g = domain_real_gradient(dom, pt);
            double du = 0.0;
            for (int j = 0; j < d; ++j) du += g[j] * u[j];
            if (std::abs(du) < 1e-14) break;
            t -= e / du;
        }
        for (int j = 0; j < d; ++j) pt[j] = t * u[j];
        out[i] = std::move(pt);
    });
    return out;
}

PscReport pseudoconvexity_report(const DomainSpec& dom, int sampleCount, uint64_t seed) {
    if (sampleCount < 1) throw Error(errc::config, "pseudoconvexity report needs sampleCount >= 1");
    PscReport rep;
    rep.seed = seed;
    rep.samples = sampleCount;
    auto pts = boundary_samples(dom, sampleCount, seed);
    rep.values.assign(sampleCount, 0.0);
    parallel_for(sampleCount, [&](int i) { rep.values[i] = levi_min(dom, pts[i]); });
    int best = 0;
    for (int i = 1; i < sampleCount; ++i)
        if (rep.values[i] < rep.values[best]) best = i;
    rep.minLevi = rep.values[best];
    rep.argmin = pts[best];
    return rep;
}

std::vector<std::vector<double>> tangent_frame(const DomainSpec& dom,
                                               std::span<const double> boundaryPoint) {
    const int d = dom.real_dim();
    auto g = domain_real_gradient(dom, boundaryPoint);
    double gn = 0.0;
    for (double x : g) gn += x * x;
    gn = std::sqrt(gn);
    if (gn < 1e-10) throw Error(errc::degenerate, "tangent_frame: degenerate gradient");
    for (auto& x : g) x /= gn;

    std::vector<std::vector<double>> frame;
    frame.push_back(g); // slot 0 holds the unit normal; tangentials follow
    for (int axis = 0; axis < d && int(frame.size()) < d; ++axis) {
        std::vector<double> v(d, 0.0);
        v[axis] = 1.0;
        for (const auto& f : frame) {
            double dot = 0.0;
            for (int i = 0; i < d; ++i) dot += v[i] * f[i];
            for (int i = 0; i < d; ++i) v[i] -= dot * f[i];
        }
        double n2 = 0.0;
        for (double x : v) n2 += x * x;
        if (n2 < 1e-8) continue; // axis nearly parallel to the normal
        double inv = 1.0 / std::sqrt(n2);
        for (auto& x : v) x *= inv;
        frame.push_back(std::move(v));
    }
    frame.erase(frame.begin());
    if (int(frame.size()) != d - 1)
        throw Error(errc::degenerate, "tangent_frame: could not complete the frame");
    return frame;
}

} // namespace cma
