#pragma once
// Enclosure and cutter-hit events, the scale bracket K(r) and the reference
// tail curves.
//
// The detectors are templates over a bit source with `bool bit(const Site&)`:
// a Configuration (throws UndecidableError when asked outside its window) or a
// FieldSampler (draws lazily from the infinite field).

#include <cmath>
#include <optional>

#include "eqm/clumping.hpp"

namespace eqm {

enum class EventKind { Enclosed, CutterHits, CutterHitsTail };

struct EventReport {
    EventKind kind = EventKind::Enclosed;
    int level = 0;
    double scale = 0.0;
    bool occurred = false;
    std::optional<Cutter> witness;
    double residual = 0.0; // truncation residual, CutterHitsTail only
};

namespace detail {

template <class Fn>
bool any_in_box(const Site& lo, const Site& hi, Fn&& fn)
{
    const int d = lo.dim();
    Site x = lo;
    for (;;) {
        if (fn(x)) {
            return true;
        }
        int a = d - 1;
        while (a >= 0) {
            if (++x[a] <= hi[a]) {
                break;
            }
            x[a] = lo[a];
            --a;
        }
        if (a < 0) {
            return false;
        }
    }
}

// Visits every y with ||y - center||_inf == t; stops early when fn returns true.
template <class Fn>
bool any_on_shell(const Site& center, Coord t, Fn&& fn)
{
    const int d = center.dim();
    if (t == 0) {
        return fn(center);
    }
    Site delta = Site::filled(d, -t);
    for (;;) {
        bool on_face = false;
        for (int a = 0; a + 1 < d; ++a) {
            on_face = on_face || delta[a] == -t || delta[a] == t;
        }
        if (on_face) {
            for (Coord v = -t; v <= t; ++v) {
                delta[d - 1] = v;
                if (fn(center + delta)) {
                    return true;
                }
            }
        } else {
            for (const Coord v : {-t, t}) {
                delta[d - 1] = v;
                if (fn(center + delta)) {
                    return true;
                }
            }
        }
        delta[d - 1] = -t;
        int a = d - 2;
        while (a >= 0) {
            if (++delta[a] <= t) {
                break;
            }
            delta[a] = -t;
            --a;
        }
        if (a < 0) {
            return false;
        }
    }
}

} // namespace detail

// E_k(x): some k-cutter has x strictly inside, i.e. a k-seed lies in the cube
// of half-width floor(r_k) around x - s_k.
template <class Source>
EventReport detect_enclosed(const Source& src, int k, const Site& x)
{
    const int d = x.dim();
    const double r = radius_r(k, d);
    const Site s = shift_s(k, d);
    const Coord m = static_cast<Coord>(std::floor(r));
    EventReport rep;
    rep.kind = EventKind::Enclosed;
    rep.level = k;
    rep.scale = r;
    const Site base = x - s;
    const auto bit = [&](const Site& y) { return src.bit(y); };
    rep.occurred = detail::any_in_box(base - Site::filled(d, m), base + Site::filled(d, m), [&](const Site& p) {
        if (is_seed(bit, p, k)) {
            rep.witness = Cutter{p + s, k, r};
            return true;
        }
        return false;
    });
    return rep;
}

// U_k(s) around `center`: some k-cutter sphere meets the cube S(center, s),
// i.e. a k-seed p with r_k - s < ||p + s_k - center|| <= r_k + s.
template <class Source>
EventReport detect_cutter_hits(const Source& src, int k, double scale, const Site& center)
{
    const int d = center.dim();
    const double r = radius_r(k, d);
    const Site s = shift_s(k, d);
    EventReport rep;
    rep.kind = EventKind::CutterHits;
    rep.level = k;
    rep.scale = scale;
    const Coord outer = static_cast<Coord>(std::floor(r + scale));
    const Coord inner = r - scale >= 0.0 ? static_cast<Coord>(std::floor(r - scale)) : -1;
    const auto bit = [&](const Site& y) { return src.bit(y); };
    for (Coord t = inner + 1; t <= outer && !rep.occurred; ++t) {
        rep.occurred = detail::any_on_shell(center, t, [&](const Site& c) {
            if (is_seed(bit, c - s, k)) {
                rep.witness = Cutter{c, k, r};
                return true;
            }
            return false;
        });
    }
    return rep;
}

template <class Source>
EventReport detect_cutter_hits(const Source& src, int k, double scale)
{
    return detect_cutter_hits(src, k, scale, Site(src.dim()));
}

// C_k(s): the union of U_j(s) over k <= j <= k_max; the witness is the lowest
// hitting level, and `residual` bounds what levels above k_max could add.
template <class Source>
EventReport detect_cutter_tail(const Source& src, int k, double scale, int k_max, const Site& center)
{
    EventReport rep;
    rep.kind = EventKind::CutterHitsTail;
    rep.level = k;
    rep.scale = scale;
    rep.residual = truncation_bias(center.dim(), std::max(k_max, 1), scale);
    for (int j = k; j <= k_max; ++j) {
        EventReport hit = detect_cutter_hits(src, j, scale, center);
        if (hit.occurred) {
            rep.occurred = true;
            rep.witness = hit.witness;
            break;
        }
    }
    return rep;
}

template <class Source>
EventReport detect_cutter_tail(const Source& src, int k, double scale, int k_max)
{
    return detect_cutter_tail(src, k, scale, k_max, Site(src.dim()));
}

// The unique K with r_{K+1} < r <= r_{K+2}; r must exceed r_2.
int K_of_r(double r, int d);

struct TheoryParams {
    int d = 0;
    double alpha = 0.0;       // 1 / (1 + d/4)
    double beta = 0.0;        // d alpha / 2 = 2d / (d + 4)
    double beta_prelim = 0.0; // 1 / (1 + 2/d)
    int log_power = 4;
};

TheoryParams theory_params(int d);

enum class BoundVariant { Main, Preliminary, Ceiling };

// Main: c (ln r)^4 r^-beta. Preliminary: c (ln r)^2 r^-beta_prelim.
// Ceiling: c r^-(d/2), the rate at which the d/2 moment stops being finite.
double theoretical_bound(double r, int d, double c, BoundVariant variant = BoundVariant::Main);
double bound_exponent(int d, BoundVariant variant);

} // namespace eqm
