#include "eqm/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "eqm/errors.hpp"
#include "eqm/parallel.hpp"

namespace eqm {

WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t n, double z)
{
    if (n == 0) {
        return {0.0, 1.0};
    }
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

// ---------------------------------------------------------------------------

SurvivalAccumulator::SurvivalAccumulator(std::vector<Coord> radii) : radii_(std::move(radii))
{
    if (radii_.empty()) {
        throw ArgumentError("at least one radius is required");
    }
    for (std::size_t i = 0; i < radii_.size(); ++i) {
        if (radii_[i] < 1 || (i > 0 && radii_[i] <= radii_[i - 1])) {
            throw ArgumentError("radii must be positive and strictly increasing");
        }
    }
    cap_ = radii_.back();
    risk_hist_.assign(static_cast<std::size_t>(cap_) + 1, 0);
    surv_hist_.assign(static_cast<std::size_t>(cap_) + 1, 0);
}

void SurvivalAccumulator::add(const StagedMatching& m, CensorPolicy policy, bool exact_only)
{
    const Grid& g = m.grid();
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Coord bd = g.periodic() ? cap_ : std::min(g.boundary_distance(g.site(i)), cap_);
        const Displacement z = displacement(m, i, exact_only);
        ++sites_;
        if (z.censored) {
            ++censored_;
            if (policy == CensorPolicy::AsSurvivor && bd >= 0) {
                ++risk_hist_[static_cast<std::size_t>(bd)];
                ++surv_hist_[static_cast<std::size_t>(bd)];
            }
            continue;
        }
        if (bd < 0) {
            continue;
        }
        ++risk_hist_[static_cast<std::size_t>(bd)];
        const Coord key = std::min(bd, z.distance - 1);
        if (key >= 0) {
            ++surv_hist_[static_cast<std::size_t>(key)];
        }
    }
}

void SurvivalAccumulator::merge(const SurvivalAccumulator& o)
{
    if (o.radii_ != radii_) {
        throw ArgumentError("cannot merge accumulators over different radii");
    }
    for (std::size_t i = 0; i < risk_hist_.size(); ++i) {
        risk_hist_[i] += o.risk_hist_[i];
        surv_hist_[i] += o.surv_hist_[i];
    }
    sites_ += o.sites_;
    censored_ += o.censored_;
}

SurvivalCurve SurvivalAccumulator::finish(std::uint64_t trials) const
{
    SurvivalCurve c;
    c.radii = radii_;
    c.trials = trials;
    c.sites = sites_;
    c.censored = censored_;
    std::vector<std::uint64_t> risk_tail(risk_hist_.size() + 1, 0);
    std::vector<std::uint64_t> surv_tail(surv_hist_.size() + 1, 0);
    for (std::size_t i = risk_hist_.size(); i-- > 0;) {
        risk_tail[i] = risk_tail[i + 1] + risk_hist_[i];
        surv_tail[i] = surv_tail[i + 1] + surv_hist_[i];
    }
    for (const Coord r : radii_) {
        const auto at = static_cast<std::size_t>(r);
        const std::uint64_t n = risk_tail[at];
        const std::uint64_t s = surv_tail[at];
        c.at_risk.push_back(n);
        c.survivors.push_back(s);
        c.p_hat.push_back(n > 0 ? static_cast<double>(s) / static_cast<double>(n) : 0.0);
        const WilsonInterval w = wilson_interval(s, n);
        c.ci_lo.push_back(w.lo);
        c.ci_hi.push_back(w.hi);
    }
    return c;
}

// ---------------------------------------------------------------------------

namespace {

double region_sites(int d, Coord side, int k_max)
{
    if (k_max < 2) {
        return std::pow(static_cast<double>(side), d);
    }
    const double reach = std::floor(radius_r(k_max, d)) + 1.0;
    const double shift = static_cast<double>(shift_s(k_max, d)[0]);
    double total = static_cast<double>(side) + reach + shift;
    for (int a = 1; a < d; ++a) {
        total *= static_cast<double>(side) + 2.0 * reach;
    }
    return total;
}

Grid cube_grid(GeometryKind kind, int d, Coord side)
{
    const Site sides = Site::filled(d, side);
    return kind == GeometryKind::Torus ? Grid::torus(sides) : Grid::window(Site(d), sides);
}

int resolve_kmax(const TailSpec& spec)
{
    if (spec.rule != Rule::Clump) {
        return 0;
    }
    if (spec.geometry == GeometryKind::Torus) {
        const int cap = max_torus_kmax(spec.dim, spec.side);
        if (spec.k_max > cap) {
            throw ArgumentError("K_max " + std::to_string(spec.k_max) + " exceeds the torus limit " +
                                std::to_string(cap));
        }
        return spec.k_max > 0 ? spec.k_max : cap;
    }
    return spec.k_max > 0 ? spec.k_max : choose_kmax(spec.dim, spec.side).k_max;
}

} // namespace

KmaxChoice choose_kmax(int d, Coord side, double target, double site_budget)
{
    KmaxChoice best;
    best.k_max = 1;
    best.residual = truncation_bias(d, 1, static_cast<double>(side) / 2.0);
    for (int k = 1; k < 200; ++k) {
        double residual = 0.0;
        double sites = 0.0;
        try {
            residual = truncation_bias(d, k, static_cast<double>(side) / 2.0);
            sites = region_sites(d, side, k);
        } catch (const RangeError&) {
            break;
        }
        if (sites > site_budget) {
            break;
        }
        best = {k, residual, residual < target};
        if (best.meets_target) {
            break;
        }
    }
    return best;
}

StagedMatching run_trial(const TailSpec& spec, int k_max, std::uint64_t trial_seed, ClumpHierarchy* hierarchy_out)
{
    const Grid core = cube_grid(spec.geometry, spec.dim, spec.side);
    if (spec.rule == Rule::Meshalkin) {
        const Configuration c = generate_configuration(spec.dim, core, trial_seed, spec.bias);
        return staged_from_meshalkin(meshalkin_lift(c, spec.axis == 0 ? spec.dim : spec.axis));
    }
    const Grid region = required_region(core, k_max);
    const Configuration c = generate_configuration(spec.dim, region, trial_seed, spec.bias);
    ClumpHierarchy h = build_clump_hierarchy(c, k_max, core);
    StagedMatching m = build_matching(c, h);
    if (hierarchy_out != nullptr) {
        *hierarchy_out = std::move(h);
    }
    return m;
}

SurvivalCurve estimate_tail(const TailSpec& spec)
{
    if (spec.trials < 1) {
        throw ArgumentError("trials must be >= 1");
    }
    if (spec.dim < 1 || spec.dim > kMaxDim || spec.side < 1) {
        throw ArgumentError("bad dimension or side");
    }
    const int k_max = resolve_kmax(spec);
    std::vector<SurvivalAccumulator> per_trial(spec.trials, SurvivalAccumulator(spec.radii));
    parallel_for(spec.trials, [&](std::size_t t) {
        const StagedMatching m = run_trial(spec, k_max, derive_seed(spec.seed, t));
        per_trial[t].add(m, spec.policy, spec.exact_only);
    });
    SurvivalAccumulator total(spec.radii);
    for (const auto& a : per_trial) {
        total.merge(a);
    }
    SurvivalCurve curve = total.finish(spec.trials);
    if (curve.at_risk.front() == 0) {
        throw DegenerateSample("no eligible sites at the smallest radius");
    }
    return curve;
}

FitResult fit_exponent(const SurvivalCurve& curve, double r_lo, double r_hi)
{
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t i = 0; i < curve.radii.size(); ++i) {
        const auto r = static_cast<double>(curve.radii[i]);
        if (r < r_lo || r > r_hi || curve.p_hat[i] <= 0.0) {
            continue;
        }
        xs.push_back(std::log(r));
        ys.push_back(std::log(curve.p_hat[i]));
    }
    const std::size_t n = xs.size();
    if (n < 3) {
        throw DegenerateSample("exponent fit needs at least 3 radii with survivors in range");
    }
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    FitResult f;
    f.points = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = ys[i] - f.intercept - f.slope * xs[i];
        ssr += e * e;
    }
    f.stderr_slope = n > 2 ? std::sqrt(ssr / static_cast<double>(n - 2) / sxx) : 0.0;
    return f;
}

DominationResult check_domination(const SurvivalCurve& curve, int d, double r_ref, double r_lo, double r_hi,
                                  BoundVariant variant)
{
    const auto ref = std::find(curve.radii.begin(), curve.radii.end(), static_cast<Coord>(r_ref));
    if (ref == curve.radii.end()) {
        throw ArgumentError("reference radius is not on the curve");
    }
    const double p_ref = curve.p_hat[static_cast<std::size_t>(ref - curve.radii.begin())];
    if (p_ref <= 0.0) {
        throw DegenerateSample("no survivors at the reference radius");
    }
    DominationResult out;
    out.constant = p_ref / theoretical_bound(r_ref, d, 1.0, variant);
    out.dominated = true;
    for (std::size_t i = 0; i < curve.radii.size(); ++i) {
        const auto r = static_cast<double>(curve.radii[i]);
        if (r < r_lo || r > r_hi) {
            continue;
        }
        const double ratio = curve.p_hat[i] / theoretical_bound(r, d, out.constant, variant);
        out.worst_ratio = std::max(out.worst_ratio, ratio);
        if (ratio > 1.0 + 1e-9) {
            out.dominated = false;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

template <class Event>
ProportionEstimate estimate_proportion(int d, std::uint64_t trials, std::uint64_t seed, double bound, Event&& event)
{
    if (trials == 0) {
        throw ArgumentError("trials must be >= 1");
    }
    std::vector<std::uint8_t> hit(trials, 0);
    parallel_for(trials, [&](std::size_t t) {
        const FieldSampler field(d, derive_seed(seed, t), 0.5);
        hit[t] = event(field) ? 1 : 0;
    });
    ProportionEstimate e;
    e.trials = trials;
    for (auto h : hit) {
        e.hits += h;
    }
    e.p_hat = static_cast<double>(e.hits) / static_cast<double>(trials);
    e.stderr_p = std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(trials));
    e.bound = bound;
    e.within = e.p_hat <= bound + 3.0 * e.stderr_p;
    return e;
}

} // namespace

ProportionEstimate estimate_enclosure_failure(int d, int k, std::uint64_t trials, std::uint64_t seed)
{
    const Site origin(d);
    return estimate_proportion(d, trials, seed, std::exp(-static_cast<double>(k)),
                               [&](const FieldSampler& f) { return !detect_enclosed(f, k, origin).occurred; });
}

ProportionEstimate estimate_cutter_hits(int d, int k, double s, std::uint64_t trials, std::uint64_t seed)
{
    const double bound = std::ldexp(annulus_count(k, d, s), -k);
    return estimate_proportion(d, trials, seed, bound,
                               [&](const FieldSampler& f) { return detect_cutter_hits(f, k, s).occurred; });
}

ProportionEstimate estimate_cutter_tail(int d, int k, double s, int k_max, std::uint64_t trials, std::uint64_t seed)
{
    double bound = truncation_bias(d, std::max(k_max, 1), s);
    for (int j = k; j <= k_max; ++j) {
        bound += std::ldexp(annulus_count(j, d, s), -j);
    }
    return estimate_proportion(d, trials, seed, bound,
                               [&](const FieldSampler& f) { return detect_cutter_tail(f, k, s, k_max).occurred; });
}

double seed_density(const Configuration& c, int k)
{
    const Grid& g = c.grid();
    double positions = static_cast<double>(g.size());
    if (!g.periodic()) {
        const Coord fit = g.sides()[0] - (k - 1);
        if (fit <= 0) {
            return 0.0;
        }
        positions = positions / static_cast<double>(g.sides()[0]) * static_cast<double>(fit);
    }
    return static_cast<double>(find_seeds(c, k).size()) / positions;
}

std::vector<Coord> parse_radii(const std::string& text)
{
    const auto to_int = [&](std::string_view s) {
        Coord v = 0;
        const auto* end = s.data() + s.size();
        const auto res = std::from_chars(s.data(), end, v);
        if (res.ec != std::errc{} || res.ptr != end) {
            throw ArgumentError("bad radius '" + std::string(s) + "' in '" + text + "'");
        }
        return v;
    };
    std::vector<Coord> out;
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        const auto colon = text.find(':', dots);
        const Coord a = to_int(std::string_view(text).substr(0, dots));
        const Coord b = to_int(std::string_view(text).substr(dots + 2, colon == std::string::npos ? std::string::npos
                                                                                                 : colon - dots - 2));
        if (a < 1 || b < a) {
            throw ArgumentError("radius range must satisfy 1 <= a <= b: " + text);
        }
        if (colon == std::string::npos) {
            for (Coord r = a; r <= b; ++r) {
                out.push_back(r);
            }
        } else {
            const Coord n = to_int(std::string_view(text).substr(colon + 1));
            if (n < 2) {
                throw ArgumentError("log-spaced radii need n >= 2: " + text);
            }
            const double la = std::log(static_cast<double>(a));
            const double lb = std::log(static_cast<double>(b));
            for (Coord i = 0; i < n; ++i) {
                const double t = static_cast<double>(i) / static_cast<double>(n - 1);
                const auto r = static_cast<Coord>(std::llround(std::exp(la + t * (lb - la))));
                if (out.empty() || r > out.back()) {
                    out.push_back(r);
                }
            }
        }
    } else {
        std::size_t start = 0;
        while (start <= text.size()) {
            const auto comma = text.find(',', start);
            const auto piece = std::string_view(text).substr(start, comma == std::string::npos ? std::string::npos
                                                                                               : comma - start);
            out.push_back(to_int(piece));
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] < 1 || (i > 0 && out[i] <= out[i - 1])) {
            throw ArgumentError("radii must be positive and strictly increasing: " + text);
        }
    }
    return out;
}

} // namespace eqm
