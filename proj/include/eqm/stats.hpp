#pragma once
// Monte Carlo harness: pooled survival curves of the displacement Z, log-log
// exponent fits, bound domination, and event frequencies.

#include <cstdint>
#include <string>
#include <vector>

#include "eqm/events.hpp"
#include "eqm/matching_rule.hpp"

namespace eqm {

struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
};

// 95% Wilson score interval by default.
WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t n, double z = 1.959963984540054);

enum class Rule { Meshalkin, Clump };
enum class CensorPolicy { Exclude, AsSurvivor };

struct SurvivalCurve {
    std::vector<Coord> radii;
    std::vector<std::uint64_t> survivors; // sites with Z > r
    std::vector<std::uint64_t> at_risk;   // eligible sites at radius r
    std::uint64_t trials = 0;
    std::uint64_t sites = 0;    // core sites visited, all trials
    std::uint64_t censored = 0; // of which censored
    std::vector<double> p_hat;
    std::vector<double> ci_lo;
    std::vector<double> ci_hi;
};

// Per-radius accumulation of a single matching. A site is eligible at radius r
// when its distance to the window boundary is at least r (always on a torus);
// censored sites are skipped or counted as Z = infinity per `policy`.
class SurvivalAccumulator {
public:
    explicit SurvivalAccumulator(std::vector<Coord> radii);

    void add(const StagedMatching& m, CensorPolicy policy, bool exact_only = false);
    void merge(const SurvivalAccumulator& o);
    SurvivalCurve finish(std::uint64_t trials) const;

private:
    std::vector<Coord> radii_;
    Coord cap_;
    // Histograms over capped keys: boundary distance, and min(boundary, Z - 1).
    std::vector<std::uint64_t> risk_hist_;
    std::vector<std::uint64_t> surv_hist_;
    std::uint64_t sites_ = 0;
    std::uint64_t censored_ = 0;
};

struct TailSpec {
    Rule rule = Rule::Clump;
    int dim = 2;
    Coord side = 64; // core side
    GeometryKind geometry = GeometryKind::Window;
    int k_max = 0;   // clump rule; 0 = choose automatically
    int axis = 0;    // Meshalkin axis, 1-based; 0 = the last
    std::uint64_t trials = 1;
    std::uint64_t seed = 1;
    double bias = 0.5;
    std::vector<Coord> radii;
    CensorPolicy policy = CensorPolicy::Exclude;
    bool exact_only = false; // count only pairs whose clump avoids the window boundary
};

// The matching of one trial of `spec` seeded with `trial_seed`.
StagedMatching run_trial(const TailSpec& spec, int k_max, std::uint64_t trial_seed, ClumpHierarchy* hierarchy_out = nullptr);

// Trials run in parallel with seeds derive_seed(spec.seed, t); pooled counts
// do not depend on scheduling. Throws DegenerateSample when nothing is at risk.
SurvivalCurve estimate_tail(const TailSpec& spec);

struct FitResult {
    double slope = 0.0;
    double stderr_slope = 0.0;
    double intercept = 0.0;
    std::size_t points = 0;
};

// Least squares of log p_hat against log r over radii in [r_lo, r_hi] with
// nonzero survivors. Needs at least 3 points.
FitResult fit_exponent(const SurvivalCurve& curve, double r_lo, double r_hi);

struct DominationResult {
    double constant = 0.0; // C with C f(r_ref) = p_hat(r_ref)
    bool dominated = false;
    double worst_ratio = 0.0; // max p_hat(r) / (C f(r)) over the range
};

DominationResult check_domination(const SurvivalCurve& curve, int d, double r_ref, double r_lo, double r_hi,
                                  BoundVariant variant = BoundVariant::Main);

// Smallest K whose truncation residual over a window of this side is below
// `target`, capped where the generated region would exceed `site_budget`.
struct KmaxChoice {
    int k_max = 1;
    double residual = 0.0;
    bool meets_target = false;
};
KmaxChoice choose_kmax(int d, Coord side, double target = 1e-3, double site_budget = 2.5e8);

struct ProportionEstimate {
    std::uint64_t hits = 0;
    std::uint64_t trials = 0;
    double p_hat = 0.0;
    double stderr_p = 0.0;
    double bound = 0.0;
    bool within = false; // p_hat <= bound + 3 stderr
};

// Frequencies at the origin of the infinite field, one field per trial.
ProportionEstimate estimate_enclosure_failure(int d, int k, std::uint64_t trials, std::uint64_t seed);
ProportionEstimate estimate_cutter_hits(int d, int k, double s, std::uint64_t trials, std::uint64_t seed);
ProportionEstimate estimate_cutter_tail(int d, int k, double s, int k_max, std::uint64_t trials, std::uint64_t seed);

// Fraction of core sites that are k-seeds (positions whose shell fits).
double seed_density(const Configuration& c, int k);

// "a..b" (every integer), "a..b:n" (n log-spaced integers, duplicates
// dropped) or "r1,r2,...". The result is strictly increasing.
std::vector<Coord> parse_radii(const std::string& text);

} // namespace eqm
