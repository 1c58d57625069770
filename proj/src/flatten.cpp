#include "cma/flatten.hpp"

#include <algorithm>
#include <cmath>

#include "cma/parallel.hpp"
#include "cma/sampling.hpp"

namespace cma {

namespace {

// quadratic model of a coefficient field evaluated at projection jets
template <class S>
Jet<S> eval_model(const CoeffModel& m, std::span<const Jet<S>> pi,
                  std::span<const double> center) {
    const int d = int(pi.size());
    auto lay = pi[0].layout();
    std::vector<Jet<S>> diff;
    diff.reserve(d);
    for (int i = 0; i < d; ++i) diff.push_back(pi[i] - from_double<S>(center[i]));
    Jet<S> r = Jet<S>::constant(lay, from_double<S>(0.0));
    if constexpr (std::is_same_v<S, Dd>) r += m.value;
    else r += to_double(m.value);
    for (int i = 0; i < d; ++i)
        if (m.grad[i] != 0.0) r += diff[i] * from_double<S>(m.grad[i]);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            double h = m.hess[std::size_t(i) * d + j];
            if (h == 0.0) continue;
            double w = (i == j) ? 0.5 : 1.0;
            r += (diff[i] * diff[j]) * from_double<S>(w * h);
        }
    return r;
}

double dist2(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

} // namespace

namespace {

void init_samples(DefiningSeries& s, const std::vector<std::vector<double>>& pts) {
    s.samples.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        auto& sam = s.samples[i];
        sam.point = pts[i];
        auto g = domain_real_gradient(s.domain, sam.point);
        double gn = 0.0;
        for (double x : g) gn += x * x;
        gn = std::sqrt(gn);
        sam.normal.resize(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) sam.normal[j] = -g[j] / gn; // inward
        sam.tangents = tangent_frame(s.domain, sam.point);
    }
}

} // namespace

DefiningSeries::DefiningSeries(DomainSpec dom, int sampleCount, uint64_t seed)
    : domain(std::move(dom)), collar(domain.collarWidth) {
    init_samples(*this, boundary_samples(domain, sampleCount, seed));
}

DefiningSeries::DefiningSeries(DomainSpec dom,
                               const std::vector<std::vector<double>>& boundaryPoints)
    : domain(std::move(dom)), collar(domain.collarWidth) {
    init_samples(*this, boundaryPoints);
}

int DefiningSeries::nearest_sample(std::span<const double> p) const {
    int best = 0;
    double bd = 1e300;
    for (int i = 0; i < int(samples.size()); ++i) {
        double d = dist2(samples[i].point, p);
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    return best;
}

template <class S>
SeriesJets<S> evaluate_series(const DefiningSeries& s, std::span<const S> z, int order,
                              int sampleIdx, const double* boundaryHint, bool enforceCollar) {
    if (order < 2) order = 2;
    const int d = s.domain.real_dim();
    auto dj = signed_distance_jets<S>(s.domain, z, order, false, boundaryHint);
    double dval = to_double(dj.value);
    if (enforceCollar && (dval < 1e-8 || dval > s.collar))
        throw Error(errc::collar, "series evaluation outside the collar: delta = " +
                                      std::to_string(dval));

    SeriesJets<S> out;
    int idx = sampleIdx;
    std::vector<double> bpt(d);
    for (int i = 0; i < d; ++i) bpt[i] = to_double(dj.boundary[i]);
    if (idx < 0) idx = s.nearest_sample(bpt);
    const SampleState& sam = s.samples[idx];
    out.modelDistance = std::sqrt(dist2(bpt, sam.point));

    Jet<S> rho = -dj.delta;
    Jet<S> r = rho;
    for (int k = 2; k <= s.level; ++k) {
        const CoeffModel& m = sam.coeff[k - 2];
        Jet<S> ak = eval_model<S>(m, std::span<const Jet<S>>(dj.pi), sam.point);
        r += ak * powi(rho, k);
    }
    if (s.extensionBump) {
        auto [k, lambda] = *s.extensionBump;
        r += powi(dj.delta, k + 1) * from_double<S>(lambda);
    }
    if (s.patchC) {
        // patch term c * delta^(level+1)
        r += powi(dj.delta, s.patch_exponent()) * from_double<S>(*s.patchC);
    }
    out.wirt = wirtinger(r);
    out.detH = hermitian_det(out.wirt.hessian);
    {
        auto wr = wirtinger(rho);
        out.gradRho = std::move(wr.gradient);
    }
    out.r = std::move(r);
    out.delta = std::move(dj.delta);
    return out;
}

template SeriesJets<double> evaluate_series<double>(const DefiningSeries&,
                                                    std::span<const double>, int, int,
                                                    const double*, bool);
template SeriesJets<Dd> evaluate_series<Dd>(const DefiningSeries&, std::span<const Dd>, int, int,
                                            const double*, bool);

template <class S>
SeriesJets<S> evaluate_on_ray(const DefiningSeries& s, int sampleIdx, double t, int order) {
    const SampleState& sam = s.samples[sampleIdx];
    const int d = s.domain.real_dim();
    std::vector<S> z(d);
    for (int i = 0; i < d; ++i) z[i] = from_double<S>(sam.point[i] + t * sam.normal[i]);
    return evaluate_series<S>(s, std::span<const S>(z), order, sampleIdx, sam.point.data(),
                              false);
}

template SeriesJets<double> evaluate_on_ray<double>(const DefiningSeries&, int, double, int);
template SeriesJets<Dd> evaluate_on_ray<Dd>(const DefiningSeries&, int, double, int);

// --- a2 ------------------------------------------------------------------------

namespace {

// Wirtinger Hessian and gradient of rho = -delta as order-2 jet fields around
// a boundary point, from an order-4 distance jet. Projection jets ride along
// so the caller can compose field formulas with pi.
struct RhoFieldJets {
    std::vector<Cx<Jet<double>>> H; // n x n row-major, order-2 jet entries
    std::vector<Cx<Jet<double>>> grad;
    std::vector<Jet<double>> pi; // order-2 projection jets
    LayoutPtr lay2;
};

RhoFieldJets rho_field_jets(const DomainSpec& dom, std::span<const double> p) {
    auto dj = signed_distance_jets<double>(dom, p, 4, false, p.data());
    Jet<double> rho = -dj.delta;
    const int n = dom.n;
    RhoFieldJets out;
    out.lay2 = JetLayout::get(dom.real_dim(), 2);
    out.H.reserve(std::size_t(n) * n);
    std::vector<Jet<double>> d1(2 * n, Jet<double>());
    for (int a = 0; a < 2 * n; ++a) d1[a] = jet_partial(rho, a); // order 3
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Jet<double> xx = truncate(jet_partial(d1[2 * i], 2 * j), 2);
            Jet<double> yy = truncate(jet_partial(d1[2 * i + 1], 2 * j + 1), 2);
            Jet<double> xy = truncate(jet_partial(d1[2 * i], 2 * j + 1), 2);
            Jet<double> yx = truncate(jet_partial(d1[2 * i + 1], 2 * j), 2);
            out.H.push_back(Cx<Jet<double>>{(xx + yy) * 0.25, (xy - yx) * 0.25});
        }
    out.grad.reserve(n);
    for (int i = 0; i < n; ++i)
        out.grad.push_back(
            Cx<Jet<double>>{truncate(d1[2 * i], 2) * 0.5, truncate(d1[2 * i + 1], 2) * -0.5});
    out.pi.reserve(2 * n);
    for (int a = 0; a < 2 * n; ++a) out.pi.push_back(truncate(dj.pi[a], 2));
    return out;
}

CoeffModel model_from_jet(const Jet<double>& a2, int d) {
    CoeffModel m;
    m.value = Dd(a2.value());
    m.grad.assign(d, 0.0);
    m.hess.assign(std::size_t(d) * d, 0.0);
    const auto& lay = *a2.layout();
    for (int i = 0; i < d; ++i) m.grad[i] = a2[lay.unit_index(i)];
    uint8_t e[JetLayout::kMaxDim];
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            for (int v = 0; v < d; ++v) e[v] = 0;
            e[i] += 1;
            e[j] += 1;
            double c = a2[lay.rank(e)] * (i == j ? 2.0 : 1.0);
            m.hess[std::size_t(i) * d + j] = c;
            m.hess[std::size_t(j) * d + i] = c;
        }
    m.derivativesCached = true;
    return m;
}

} // namespace

CoeffModel a2_model(const DomainSpec& dom, std::span<const double> boundaryPoint) {
    auto f = rho_field_jets(dom, boundaryPoint);
    const int n = dom.n;
    Cx<Jet<double>> D = cofactor_det(f.H, n);
    Cx<Jet<double>> Q = adjugate_form_ring(f.H, n, f.grad);
    if (!(Q.re.value() > 1e-10))
        throw Error(errc::degenerate,
                    "vanishing adjugate form: point is not strictly pseudoconvex");
    Jet<double> a2 = -(D.re / (Q.re * 2.0));
    return model_from_jet(a2, dom.real_dim());
}

double compute_a2(const DomainSpec& dom, std::span<const double> boundaryPoint) {
    return to_double(a2_model(dom, boundaryPoint).value);
}

double compute_a2_printed(const DomainSpec& dom, std::span<const double> boundaryPoint) {
    auto dj = signed_distance_jets<double>(dom, boundaryPoint, 2, false, boundaryPoint.data());
    Jet<double> rho = -dj.delta;
    auto w = wirtinger(rho);
    const int n = dom.n;
    // (d rho) = sum_ij rho_i rho_jbar rho_{i jbar}
    Cxd drho(0.0, 0.0);
    double g2 = 0.0;
    for (int i = 0; i < n; ++i) {
        g2 += to_double(norm_sq(w.gradient[i]));
        for (int j = 0; j < n; ++j)
            drho += w.gradient[i] * conj(w.gradient[j]) * w.hessian.at(i, j);
    }
    double num = drho.re;
    return -num / (2.0 * (num + g2 * g2));
}

double series_adjugate_form(const DefiningSeries& s, std::span<const double> boundaryPoint,
                            int sampleIdx) {
    std::vector<double> z(boundaryPoint.begin(), boundaryPoint.end());
    auto sj = evaluate_series<double>(s, z, 2, sampleIdx, boundaryPoint.data(), false);
    return adjugate_form(sj.wirt.hessian, sj.gradRho);
}

// --- extraction -------------------------------------------------------------------

ExtractionResult richardson_limit(const std::function<double(double)>& f,
                                  const LadderParams& p) {
    const int R = p.rungs;
    if (R < 2) throw Error(errc::config, "richardson_limit needs at least 2 rungs");
    std::vector<double> t(R), v(R);
    for (int j = 0; j < R; ++j) {
        t[j] = p.t0 * std::ldexp(1.0, -j);
        v[j] = f(t[j]);
    }
    // Neville tableau toward t = 0; pick the diagonal entry with the smallest
    // successive-difference error estimate.
    std::vector<std::vector<double>> T(R);
    T[0] = v;
    double best = v[R - 1], bestErr = std::abs(v[R - 1] - v[R - 2]) + 1e-300;
    for (int k = 1; k < R; ++k) {
        T[k].resize(R - k);
        for (int j = 0; j + k < R; ++j) {
            double num = t[j] * T[k - 1][j + 1] - t[j + k] * T[k - 1][j];
            T[k][j] = num / (t[j] - t[j + k]);
        }
        double cand = T[k].back();
        double err = std::abs(cand - T[k - 1].back()) +
                     (T[k].size() > 1 ? 0.25 * std::abs(cand - T[k][T[k].size() - 2]) : 0.0);
        if (err < bestErr) {
            best = cand;
            bestErr = err;
        }
    }
    ExtractionResult out;
    out.value = best;
    out.error = bestErr;
    out.ts = std::move(t);
    out.quotients = std::move(v);
    return out;
}

ExtractionResult extract_b_from(const std::function<std::pair<double, double>(double)>& detRho,
                                int level, const LadderParams& p) {
    auto quotient = [&](double t) {
        auto [det, rho] = detRho(t);
        return det / pow_int(rho, level - 1);
    };
    ExtractionResult r = richardson_limit(quotient, p);
    double scale = std::max(std::abs(r.value), 1e-12);
    if (r.error > 1e-4 * scale)
        throw Error(errc::precision,
                    "b extraction residual " + std::to_string(r.error) + " exceeds 1e-4 of " +
                        std::to_string(scale) + ": jet order or precision insufficient");
    return r;
}

ExtractionResult extract_b(const DefiningSeries& s, int sampleIdx, const LadderParams& p,
                           const std::vector<double>* rayBase) {
    const SampleState& sam = s.samples[sampleIdx];
    const int d = s.domain.real_dim();
    std::vector<double> base = rayBase ? *rayBase : sam.point;
    std::vector<double> nrm(d);
    {
        auto g = domain_real_gradient(s.domain, base);
        double gn = 0.0;
        for (double x : g) gn += x * x;
        gn = std::sqrt(gn);
        for (int i = 0; i < d; ++i) nrm[i] = -g[i] / gn;
    }
    const bool dd = s.use_dd(s.level);
    auto detRho = [&](double t) -> std::pair<double, double> {
        if (dd) {
            std::vector<Dd> z(d);
            for (int i = 0; i < d; ++i) z[i] = Dd(base[i]) + Dd(t) * Dd(nrm[i]);
            auto sj = evaluate_series<Dd>(s, z, 2, sampleIdx, base.data(), false);
            return {to_double(sj.detH), -to_double(sj.delta.value())};
        }
        std::vector<double> z(d);
        for (int i = 0; i < d; ++i) z[i] = base[i] + t * nrm[i];
        auto sj = evaluate_series<double>(s, z, 2, sampleIdx, base.data(), false);
        return {sj.detH, -sj.delta.value()};
    };
    return extract_b_from(detRho, s.level, p);
}

double next_coefficient(const DefiningSeries& s, int sampleIdx, const LadderParams& p,
                        const std::vector<double>* rayBase, double* bOut, double* bErrOut) {
    auto ex = extract_b(s, sampleIdx, p, rayBase);
    const std::vector<double>& base = rayBase ? *rayBase : s.samples[sampleIdx].point;
    double Q = series_adjugate_form(s, base, sampleIdx);
    if (!(std::abs(Q) > 1e-10))
        throw Error(errc::degenerate, "next_coefficient: degenerate adjugate form");
    int m = s.level;
    if (bOut) *bOut = ex.value;
    if (bErrOut) *bErrOut = ex.error;
    return -ex.value / (double(m + 1) * double(m) * Q);
}

// --- level advancement -----------------------------------------------------------

void advance_level(DefiningSeries& s, const LadderParams& p, bool valueOnly,
                   double stencilStep) {
    const int d = s.domain.real_dim();
    const int m = s.level;
    const int ns = int(s.samples.size());

    if (m == 1) {
        // analytic a_2 models
        parallel_for(ns, [&](int i) {
            s.samples[i].coeff.push_back(a2_model(s.domain, s.samples[i].point));
        });
        s.level = 2;
        return;
    }

    std::vector<CoeffModel> models(ns);
    std::vector<double> bvals(ns), berrs(ns);
    parallel_for(ns, [&](int i) {
        const SampleState& sam = s.samples[i];
        double b = 0.0, be = 0.0;
        double v0 = next_coefficient(s, i, p, nullptr, &b, &be);
        bvals[i] = b;
        berrs[i] = be;
        CoeffModel mod;
        mod.value = Dd(v0);
        mod.grad.assign(d, 0.0);
        mod.hess.assign(std::size_t(d) * d, 0.0);
        if (!valueOnly) {
            const double h = stencilStep;
            auto value_at = [&](const std::vector<double>& w) {
                auto base = boundary_projection(s.domain, w);
                return next_coefficient(s, i, p, &base);
            };
            const auto& taus = sam.tangents;
            const int nt = int(taus.size());
            std::vector<double> gradT(nt, 0.0);
            std::vector<double> hessT(std::size_t(nt) * nt, 0.0);
            auto offset = [&](double a, int ti, double bcoef = 0.0, int tj = 0) {
                std::vector<double> w = sam.point;
                for (int r = 0; r < d; ++r) {
                    w[r] += a * taus[ti][r];
                    if (bcoef != 0.0) w[r] += bcoef * taus[tj][r];
                }
                return w;
            };
            std::vector<double> vp(nt), vm(nt);
            for (int ti = 0; ti < nt; ++ti) {
                vp[ti] = value_at(offset(h, ti));
                vm[ti] = value_at(offset(-h, ti));
                double vph = value_at(offset(0.5 * h, ti));
                double vmh = value_at(offset(-0.5 * h, ti));
                double Dh = (vp[ti] - vm[ti]) / (2 * h);
                double Dh2 = (vph - vmh) / h;
                gradT[ti] = (4.0 * Dh2 - Dh) / 3.0;
                hessT[std::size_t(ti) * nt + ti] = (vp[ti] - 2 * v0 + vm[ti]) / (h * h);
            }
            for (int ti = 0; ti < nt; ++ti)
                for (int tj = ti + 1; tj < nt; ++tj) {
                    double vpp = value_at(offset(h, ti, h, tj));
                    double vmm = value_at(offset(-h, ti, -h, tj));
                    double vpm = value_at(offset(h, ti, -h, tj));
                    double vmp = value_at(offset(-h, ti, h, tj));
                    double c = (vpp + vmm - vpm - vmp) / (4 * h * h);
                    hessT[std::size_t(ti) * nt + tj] = c;
                    hessT[std::size_t(tj) * nt + ti] = c;
                }
            // back to ambient coordinates
            for (int r = 0; r < d; ++r)
                for (int ti = 0; ti < nt; ++ti) mod.grad[r] += gradT[ti] * taus[ti][r];
            for (int r = 0; r < d; ++r)
                for (int c2 = 0; c2 < d; ++c2) {
                    double acc = 0.0;
                    for (int ti = 0; ti < nt; ++ti)
                        for (int tj = 0; tj < nt; ++tj)
                            acc += hessT[std::size_t(ti) * nt + tj] * taus[ti][r] * taus[tj][c2];
                    mod.hess[std::size_t(r) * d + c2] = acc;
                }
            mod.derivativesCached = true;
        }
        models[i] = std::move(mod);
    });
    for (int i = 0; i < ns; ++i) {
        s.samples[i].coeff.push_back(std::move(models[i]));
        s.samples[i].b.push_back(bvals[i]);
        s.samples[i].bErr.push_back(berrs[i]);
    }
    s.level = m + 1;
}

// --- certification ----------------------------------------------------------------

SlopeFit slope_fit(std::span<const double> ts, std::span<const double> dets) {
    SlopeFit out;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        double a = std::abs(dets[i]);
        if (a < 1e-30) { // determinant underflow: rung dropped, reported
            ++out.dropped;
            continue;
        }
        xs.push_back(std::log(ts[i]));
        ys.push_back(std::log(a));
        out.ts.push_back(ts[i]);
        out.dets.push_back(dets[i]);
    }
    if (xs.size() < 2) throw Error(errc::precision, "slope fit: too few usable rungs");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= double(xs.size());
    my /= double(xs.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double r = ys[i] - (out.intercept + out.slope * xs[i]);
        rss += r * r;
    }
    out.residual = std::sqrt(rss / double(xs.size()));
    return out;
}

SlopeFit vanishing_order(const DefiningSeries& s, int sampleIdx, const LadderParams& p) {
    if (p.rungs < 5) throw Error(errc::config, "vanishing_order needs at least 5 rungs");
    const bool dd = s.use_dd(s.level);
    std::vector<double> ts(p.rungs), dets(p.rungs);
    for (int j = 0; j < p.rungs; ++j) {
        double t = p.t0 * std::ldexp(1.0, -j);
        ts[j] = t;
        if (dd) dets[j] = to_double(evaluate_on_ray<Dd>(s, sampleIdx, t, 2).detH);
        else dets[j] = evaluate_on_ray<double>(s, sampleIdx, t, 2).detH;
    }
    return slope_fit(ts, dets);
}

// --- patch ------------------------------------------------------------------------

PatchResult psh_patch(DefiningSeries& s, int collarSamples, uint64_t seed) {
    const int ns = int(s.samples.size());
    PatchResult out;
    // b at the final level, for the grid unit 2|b| / |grad delta|^2
    out.bFinal.assign(ns, 0.0);
    LadderParams lp;
    lp.t0 = std::min(1e-2, s.collar / 4.0);
    parallel_for(ns, [&](int i) { out.bFinal[i] = extract_b(s, i, lp).value; });
    double cUnit = 0.0;
    for (double b : out.bFinal) cUnit = std::max(cUnit, 2.0 * std::abs(b));
    out.cUnit = cUnit;

    // collar scan points: inward offsets of a fresh boundary sample set
    const int d = s.domain.real_dim();
    int nb = std::max(8, collarSamples / 5);
    auto bpts = boundary_samples(s.domain, nb, seed);
    struct ScanPoint {
        std::vector<double> z;
        int sample;
        std::vector<double> base;
    };
    std::vector<ScanPoint> scan;
    double tmin = std::max(1e-3, 1e-3 * s.collar), tmax = 0.95 * s.collar;
    int perRay = std::max(1, collarSamples / nb);
    for (int i = 0; i < nb; ++i) {
        auto g = domain_real_gradient(s.domain, bpts[i]);
        double gn = 0.0;
        for (double x : g) gn += x * x;
        gn = std::sqrt(gn);
        for (int j = 0; j < perRay; ++j) {
            double frac = (j + 0.5) / perRay;
            double t = tmin * std::pow(tmax / tmin, frac);
            ScanPoint sp;
            sp.z.resize(d);
            for (int r = 0; r < d; ++r) sp.z[r] = bpts[i][r] - t * g[r] / gn;
            sp.base = bpts[i];
            sp.sample = s.nearest_sample(bpts[i]);
            scan.push_back(std::move(sp));
        }
    }

    auto min_eig_for = [&](double c) {
        std::optional<double> saved = s.patchC;
        s.patchC = c;
        std::vector<double> eigs(scan.size(), 0.0);
        parallel_for(int(scan.size()), [&](int i) {
            auto sj = evaluate_series<double>(s, scan[i].z, 2, scan[i].sample,
                                              scan[i].base.data(), false);
            eigs[i] = jacobi_eigenvalues(sj.wirt.hessian).front();
        });
        s.patchC = saved;
        double mn = eigs[0];
        for (double e : eigs) mn = std::min(mn, e);
        return mn;
    };

    const double tol = -1e-10;
    double e0 = min_eig_for(0.0);
    if (e0 >= tol) {
        out.c = 0.0;
        out.minEigen = e0;
        out.gridIndex = -1;
        s.patchC = 0.0;
        return out;
    }
    for (int k = 0; k <= 20; ++k) {
        double c = std::ldexp(1.0, k) * cUnit;
        double e = min_eig_for(c);
        if (e >= tol) {
            out.c = c;
            out.minEigen = e;
            out.gridIndex = k;
            s.patchC = c;
            return out;
        }
    }
    throw Error(errc::collar,
                "plurisubharmonicity patch: no grid constant suffices; shrink the collar");
}

// --- pipeline ------------------------------------------------------------------------

FlattenOutcome flatten(const DomainSpec& dom, int q, const FlattenOptions& opts) {
    if (q < 1 || q > 5) throw Error(errc::config, "flatten: q outside [1, 5]");
    FlattenOutcome out;
    out.report.seed = opts.seed;
    out.report.sampleCount = opts.sampleCount;

    DomainSpec dm = dom;
    if (opts.collarOverride > 0.0) dm.collarWidth = opts.collarOverride;
    DefiningSeries s(dm, opts.sampleCount, opts.seed);
    s.precision = opts.precision;
    s.targetOrder = q;

    auto certify_level = [&](DefiningSeries& ser) {
        LevelCertificate cert;
        cert.level = ser.level;
        cert.expectedOrder = double(ser.level - 1);
        cert.precision = ser.use_dd(ser.level) ? "dd" : "double";
        const int ns = int(ser.samples.size());
        cert.slopes.assign(ns, 0.0);
        cert.residuals.assign(ns, 0.0);
        LadderParams lp = opts.ladder;
        lp.t0 = std::min(lp.t0, ser.collar / 4.0);
        parallel_for(ns, [&](int i) {
            auto fit = vanishing_order(ser, i, lp);
            cert.slopes[i] = fit.slope;
            cert.residuals[i] = fit.residual;
        });
        cert.slopeMin = *std::min_element(cert.slopes.begin(), cert.slopes.end());
        cert.slopeMean = 0.0;
        for (double v : cert.slopes) cert.slopeMean += v;
        cert.slopeMean /= double(ns);
        cert.pass = cert.slopeMin >= cert.expectedOrder - kSlopeMargin;
        for (const auto& sam : ser.samples) {
            cert.coeffValues.push_back(to_double(sam.coeff.back().value));
            if (!sam.b.empty()) {
                cert.bValues.push_back(sam.b.back());
                cert.bErrors.push_back(sam.bErr.back());
            }
        }
        return cert;
    };

    try {
        LadderParams lp = opts.ladder;
        lp.t0 = std::min(lp.t0, s.collar / 4.0);
        while (s.level <= q) {
            const bool last = (s.level == q);
            const int retries = 2;
            for (int attempt = 0;; ++attempt) {
                try {
                    DefiningSeries trial = s;
                    advance_level(trial, lp, /*valueOnly=*/last && trial.level > 1,
                                  opts.stencilStep);
                    if (opts.a2Override && trial.level == 2) {
                        for (auto& sam : trial.samples) {
                            sam.coeff[0].value = Dd(*opts.a2Override);
                            std::fill(sam.coeff[0].grad.begin(), sam.coeff[0].grad.end(), 0.0);
                            std::fill(sam.coeff[0].hess.begin(), sam.coeff[0].hess.end(), 0.0);
                        }
                    }
                    s = std::move(trial);
                    break;
                } catch (const Error& e) {
                    if (attempt + 1 >= retries ||
                        (e.code() != errc::precision && e.code() != errc::collar))
                        throw;
                    // shrinking collar: mirrors the proof's eps_m update
                    s.collar *= 0.5;
                    lp.t0 = std::min(lp.t0, s.collar / 4.0);
                }
            }
            out.report.levels.push_back(certify_level(s));
        }
        if (opts.doPatch) {
            PatchResult pr = psh_patch(s, opts.collarSamples, opts.seed + 55);
            out.report.patch = pr;
            // the patch must not cost a certified order
            out.report.levels.push_back(certify_level(s));
        }
        out.report.complete = true;
    } catch (const Error& e) {
        out.report.complete = false;
        out.report.failure = e.what();
    }
    out.report.collarFinal = s.collar;
    out.series = std::move(s);
    return out;
}

} // namespace cma
