#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "eqm/errors.hpp"
#include "eqm/events.hpp"
#include "eqm/stats.hpp"

using namespace eqm;

namespace {

// Heads at a few listed sites, tails everywhere else.
struct SparseField {
    int d;
    std::vector<Site> heads;

    int dim() const { return d; }
    bool bit(const Site& x) const { return std::find(heads.begin(), heads.end(), x) != heads.end(); }
};

} // namespace

TEST_CASE("enclosure by a single cutter")
{
    const SparseField f{2, {Site{-450, 0}}};
    const EventReport e = detect_enclosed(f, 2, Site{0, 0});
    CHECK(e.occurred);
    REQUIRE(e.witness.has_value());
    CHECK(e.witness->center == Site{0, 0});
    CHECK(e.witness->radius == 4.5);
    CHECK(detect_enclosed(f, 2, Site{4, -4}).occurred);
    CHECK_FALSE(detect_enclosed(f, 2, Site{5, 0}).occurred);
    CHECK_FALSE(detect_enclosed(SparseField{2, {}}, 2, Site{0, 0}).occurred);
    // A head with a head right after it is not a 2-seed; the second head is,
    // and its cutter is centred at (1, 0).
    const SparseField pair{2, {Site{-450, 0}, Site{-449, 0}}};
    CHECK_FALSE(detect_enclosed(pair, 2, Site{-4, 0}).occurred);
    CHECK(detect_enclosed(pair, 2, Site{5, 0}).occurred);
}

TEST_CASE("detectors on a finite window need the whole search box")
{
    const Configuration small = generate_configuration(2, Grid::window(Site{-10, -10}, Site{20, 20}), 1, 0.5);
    CHECK_THROWS_AS(detect_enclosed(small, 2, Site{0, 0}), UndecidableError);
    const Configuration big = generate_configuration(2, Grid::window(Site{-470, -10}, Site{480, 20}), 1, 0.5);
    const FieldSampler field(2, 1, 0.5);
    CHECK(detect_enclosed(big, 2, Site{0, 0}).occurred == detect_enclosed(field, 2, Site{0, 0}).occurred);
}

TEST_CASE("cutter hits")
{
    const double r3 = radius_r(3, 2);
    const SparseField at_origin{2, {Site{0, 0} - shift_s(3, 2)}};
    CHECK(detect_cutter_hits(at_origin, 3, 10.0).occurred);
    // Sphere of radius 8.98 around the origin misses the small cube S(1).
    CHECK_FALSE(detect_cutter_hits(at_origin, 3, 1.0).occurred);
    CHECK_FALSE(detect_cutter_hits(SparseField{2, {}}, 3, 10.0).occurred);

    const SparseField near{2, {Site{8, 0} - shift_s(3, 2)}};
    const EventReport hit = detect_cutter_hits(near, 3, 1.0);
    CHECK(hit.occurred);
    REQUIRE(hit.witness.has_value());
    CHECK(hit.witness->center == Site{8, 0});
    CHECK(hit.witness->radius == r3);

    // Shells visited by the annulus scan add up to the annulus count.
    for (int k = 2; k <= 6; ++k) {
        for (double s : {1.0, 4.0, 16.0}) {
            const double r = radius_r(k, 2);
            const auto outer = static_cast<Coord>(std::floor(r + s));
            const Coord inner = r - s >= 0.0 ? static_cast<Coord>(std::floor(r - s)) : -1;
            std::set<std::pair<Coord, Coord>> seen;
            for (Coord t = inner + 1; t <= outer; ++t) {
                detail::any_on_shell(Site{0, 0}, t, [&](const Site& y) {
                    seen.emplace(y[0], y[1]);
                    return false;
                });
            }
            CHECK(static_cast<double>(seen.size()) == annulus_count(k, 2, s));
        }
    }
}

TEST_CASE("cutter tail takes the lowest hitting level")
{
    // A lone head is a seed of every level; only its 3-cutter lands near the origin.
    const SparseField f{2, {Site{0, 0} - shift_s(3, 2)}};
    const EventReport tail = detect_cutter_tail(f, 2, 10.0, 5);
    CHECK(tail.occurred);
    REQUIRE(tail.witness.has_value());
    CHECK(tail.witness->level == 3);
    CHECK(tail.residual == truncation_bias(2, 5, 10.0));

    const EventReport cut_off = detect_cutter_tail(f, 2, 10.0, 2);
    CHECK_FALSE(cut_off.occurred);
    CHECK(cut_off.residual > 0.0);
    CHECK_FALSE(detect_cutter_tail(f, 4, 10.0, 8).occurred);
}

TEST_CASE("scale bracket K(r)")
{
    CHECK(K_of_r(20.0, 2) == 3);
    CHECK(K_of_r(20.0, 1) == 1);
    CHECK(K_of_r(radius_r(5, 2), 2) == 3);
    CHECK(K_of_r(std::nextafter(radius_r(5, 2), 1e9), 2) == 4);
    CHECK_THROWS_AS(K_of_r(radius_r(2, 2), 2), RangeError);
    CHECK_THROWS_AS(K_of_r(1.0, 1), RangeError);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(1.0, 12.0);
    for (int t = 0; t < 200; ++t) {
        const double r = std::exp(u(rng));
        for (int d = 1; d <= 3; ++d) {
            if (r <= radius_r(2, d)) {
                continue;
            }
            const int K = K_of_r(r, d);
            CHECK(radius_r(K + 1, d) < r);
            CHECK(r <= radius_r(K + 2, d));
        }
    }
}

TEST_CASE("reference exponents and curves")
{
    CHECK(theory_params(2).beta == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(theory_params(4).beta == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(theory_params(2).beta_prelim == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(theory_params(2).alpha == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(bound_exponent(2, BoundVariant::Main) == doctest::Approx(2.0 / 3.0));
    CHECK(bound_exponent(2, BoundVariant::Preliminary) == doctest::Approx(0.5));
    CHECK(bound_exponent(2, BoundVariant::Ceiling) == doctest::Approx(1.0));
    const double e = std::exp(1.0);
    CHECK(theoretical_bound(e, 2, 3.0) == doctest::Approx(3.0 * std::exp(-2.0 / 3.0)));
    CHECK(theoretical_bound(e * e, 2, 1.0, BoundVariant::Preliminary) == doctest::Approx(4.0 * std::exp(-1.0)));
    CHECK(theoretical_bound(100.0, 2, 1.0, BoundVariant::Ceiling) == doctest::Approx(0.01));
}

TEST_CASE("event frequencies stay under their bounds")
{
    for (int k = 4; k <= 5; ++k) {
        const ProportionEstimate e = estimate_enclosure_failure(2, k, 2000, 11);
        CHECK(e.within);
        CHECK(e.bound == doctest::Approx(std::exp(-static_cast<double>(k))));
    }
    const ProportionEstimate h = estimate_cutter_hits(1, 6, 4.0, 4000, 12);
    CHECK(h.bound == doctest::Approx(annulus_count(6, 1, 4.0) / 64.0));
    CHECK(h.within);
    // Same seed, same answer.
    CHECK(estimate_cutter_hits(1, 6, 4.0, 4000, 12).hits == h.hits);
}

TEST_CASE("cutter hit frequency scales like s k^2 / r_k")
{
    // In d = 1 the union bound is small from level 7 on; the ratio of the
    // observed frequency to s k^2 / r_k should stay within a factor 2.
    const double s = 16.0;
    std::vector<double> c3;
    for (int k = 7; k <= 11; ++k) {
        const ProportionEstimate e = estimate_cutter_tail(1, k, s, k + 10, 20000, 31);
        CHECK(e.within);
        c3.push_back(e.p_hat / (s * k * k / radius_r(k, 1)));
    }
    const auto [lo, hi] = std::minmax_element(c3.begin(), c3.end());
    CHECK(*hi <= 2.0 * *lo);
}
