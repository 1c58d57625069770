#pragma once

#include <functional>
#include <optional>

#include "cma/domain.hpp"

namespace cma {

// ----------------------------------------------------------------------------
// The boundary-flattening recursion: starting from rho = -delta, install
// coefficient fields a_2, a_3, ... with
//
//     r^(m) = rho + sum_{k=2}^m (a_k o pi) rho^k,
//
// choosing each a_{m+1} so that det H(r^(m)) = b_{m-1} rho^{m-1} gains one
// more vanishing order per level, then add the plurisubharmonicity patch
// rho_q = r^(q+1) + c delta^(q+3)... (exponent level+2) once the recursion
// stops. Coefficient fields live on a cached boundary sample set as quadratic
// models (value, tangential gradient, tangential Hessian): the determinant of
// H(r) genuinely depends on two tangential derivatives of every a_k, so values
// alone cannot reproduce the vanishing order off the symmetric catalogs.
// a_2's model is assembled analytically from the distance jets; higher models
// come from Richardson-refined tangential differences of extracted values.
// ----------------------------------------------------------------------------

struct CoeffModel {
    Dd value{0.0};
    std::vector<double> grad;  // ambient components, tangential (2n)
    std::vector<double> hess;  // 2n x 2n row-major, symmetric
    bool derivativesCached = false;
};

struct SampleState {
    std::vector<double> point;   // boundary point, 2n reals
    std::vector<double> normal;  // inward unit normal (= grad delta)
    std::vector<std::vector<double>> tangents; // 2n-1 orthonormal tangential dirs
    std::vector<CoeffModel> coeff;             // [k-2] -> model of a_k
    std::vector<double> b;                     // b_{m-1} extracted at level m (index m-2)
    std::vector<double> bErr;                  // extrapolation error estimates
};

struct LadderParams {
    double t0 = 1e-2;
    int rungs = 6;
};

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0; // log-log intercept: the per-level constant C
    double residual = 0.0;  // rms of the fit
    std::vector<double> ts, dets;
    int dropped = 0; // rungs lost to determinant underflow
};

struct ExtractionResult {
    double value = 0.0;
    double error = 0.0; // extrapolation error estimate
    std::vector<double> ts, quotients;
};

enum class PrecisionMode { automatic, dbl, dd };

class DefiningSeries {
public:
    DomainSpec domain;
    int level = 1;       // m: coefficient fields a_2..a_m installed
    int targetOrder = 0; // q
    double collar = 0.0; // eps_m, shrinks on retries
    std::optional<double> patchC;
    PrecisionMode precision = PrecisionMode::automatic;
    std::vector<SampleState> samples;
    // normal-direction extension perturbation (a_k -> a_k + delta * lambda):
    // adds lambda * delta^{k+1} to the series; exercised by the
    // boundary-value-sufficiency property test
    std::optional<std::pair<int, double>> extensionBump;

    DefiningSeries() = default;
    DefiningSeries(DomainSpec dom, int sampleCount, uint64_t seed);
    DefiningSeries(DomainSpec dom, const std::vector<std::vector<double>>& boundaryPoints);

    int patch_exponent() const { return level + 1; } // delta^(m+2) at level m+1

    // scalar used for ladders at a given series level
    bool use_dd(int atLevel) const {
        if (precision == PrecisionMode::dbl) return false;
        if (precision == PrecisionMode::dd) return true;
        return atLevel >= 4;
    }

    int nearest_sample(std::span<const double> boundaryPoint) const;
};

template <class S> struct SeriesJets {
    Jet<S> r;
    Jet<S> delta;
    WirtingerDerivatives<S> wirt; // of r
    std::vector<Cx<S>> gradRho;   // Wirtinger gradient of rho = -delta
    S detH{0.0};
    double modelDistance = 0.0; // |pi(z) - sample point|: interpolation radius
};

// Evaluate the series jets at a real 2n point. `sampleIdx` selects the
// coefficient cache (< 0: nearest by projection). `boundaryHint` seeds the
// projection Newton (ladders pass their ray base).
template <class S>
SeriesJets<S> evaluate_series(const DefiningSeries& s, std::span<const S> z, int order,
                              int sampleIdx = -1, const double* boundaryHint = nullptr,
                              bool enforceCollar = true);

// convenience: evaluate along the inward normal of a sample at distance t
template <class S>
SeriesJets<S> evaluate_on_ray(const DefiningSeries& s, int sampleIdx, double t, int order);

// --- coefficient construction ------------------------------------------------

// Schur-consistent second coefficient: a_2 = -det H(rho) / (2 <adj(H(rho)) d rho, d rho>).
double compute_a2(const DomainSpec& dom, std::span<const double> boundaryPoint);
// The printed closed form -(d rho)/(2((d rho) + |d rho|^4)); kept for the
// discriminating report, not used by the recursion.
double compute_a2_printed(const DomainSpec& dom, std::span<const double> boundaryPoint);
// full quadratic model of a_2 (analytic, any boundary point)
CoeffModel a2_model(const DomainSpec& dom, std::span<const double> boundaryPoint);

// adjugate form <adj(H(r^(m))) d rho, d rho> at a boundary point
double series_adjugate_form(const DefiningSeries& s, std::span<const double> boundaryPoint,
                            int sampleIdx);

// Richardson/Neville extrapolation of f(t) -> t = 0 on the geometric ladder
// t_j = t0 2^{-j}; returns the diagonal entry with the best error estimate.
ExtractionResult richardson_limit(const std::function<double(double)>& f,
                                  const LadderParams& p);

// b_{m-1} at a boundary sample: limit of det H(r^(m)) / rho^{m-1} along the
// inward normal. `rayBase` defaults to the sample's own point; cache models
// always come from `sampleIdx` (stencil evaluations probe nearby ray bases).
ExtractionResult extract_b(const DefiningSeries& s, int sampleIdx, const LadderParams& p,
                           const std::vector<double>* rayBase = nullptr);

// test seam shared with extract_b: quotient ladder on user-supplied
// (det, rho) data
ExtractionResult extract_b_from(const std::function<std::pair<double, double>(double)>& detRho,
                                int level, const LadderParams& p);

// a_{m+1}(p) = -b_{m-1}(p) / ((m+1) m <adj(H(r^(m))) d rho, d rho>(p))
double next_coefficient(const DefiningSeries& s, int sampleIdx, const LadderParams& p,
                        const std::vector<double>* rayBase = nullptr,
                        double* bOut = nullptr, double* bErrOut = nullptr);

// install a_{m+1} models on every sample (values + tangential stencil
// derivatives unless `valueOnly`); advances level by one
void advance_level(DefiningSeries& s, const LadderParams& p, bool valueOnly = false,
                   double stencilStep = 1e-2);

// --- certification -------------------------------------------------------------

// least-squares slope of log|det H(r^(m))| against log delta along the
// inward normal ladder
SlopeFit vanishing_order(const DefiningSeries& s, int sampleIdx, const LadderParams& p);

// slope fit on explicit data (also the oracle seam for synthetic fields)
SlopeFit slope_fit(std::span<const double> ts, std::span<const double> dets);

struct PatchResult {
    double c = 0.0;
    double cUnit = 0.0;
    double minEigen = 0.0;
    int gridIndex = -1; // -1: c = 0 accepted
    std::vector<double> bFinal;
};

// grid search for the smallest patch constant making H(rho_q) PSD on sampled
// collar points; installs patchC on success
PatchResult psh_patch(DefiningSeries& s, int collarSamples, uint64_t seed = 97);

// --- pipeline -------------------------------------------------------------------

struct FlattenOptions {
    int sampleCount = 12;
    uint64_t seed = 42;
    LadderParams ladder;
    PrecisionMode precision = PrecisionMode::automatic;
    double collarOverride = -1.0;
    int collarSamples = 160;       // psh patch scan budget
    double stencilStep = 1e-2;
    bool doPatch = true;
    std::optional<double> a2Override; // discriminating test: force a flat a_2 value
};

struct LevelCertificate {
    int level = 0;
    double slopeMin = 0.0, slopeMean = 0.0;
    double expectedOrder = 0.0;
    bool pass = false;
    std::vector<double> slopes, residuals, coeffValues, bValues, bErrors;
    const char* precision = "double";
};

struct FlattenReport {
    bool complete = false;
    std::string failure;
    std::vector<LevelCertificate> levels;
    std::optional<PatchResult> patch;
    double collarFinal = 0.0;
    uint64_t seed = 0;
    int sampleCount = 0;
};

struct FlattenOutcome {
    DefiningSeries series;
    FlattenReport report;
};

// The full Theorem-2.2 pipeline: a_2, then (extract -> next coefficient) up to
// level q+1, then the plurisubharmonicity patch; certification slopes at each
// level with the rule slope >= (level - 1) - 0.15.
FlattenOutcome flatten(const DomainSpec& dom, int q, const FlattenOptions& opts = {});

inline constexpr double kSlopeMargin = 0.15;

} // namespace cma
