#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "eqm/errors.hpp"
#include "eqm/stats.hpp"

using namespace eqm;

namespace {

SurvivalCurve synthetic(const std::vector<Coord>& radii, double (*p)(double))
{
    SurvivalCurve c;
    c.radii = radii;
    for (Coord r : radii) {
        c.p_hat.push_back(p(static_cast<double>(r)));
    }
    return c;
}

} // namespace

TEST_CASE("wilson interval")
{
    const WilsonInterval none = wilson_interval(0, 10);
    CHECK(none.lo == 0.0);
    const double z2 = 1.959963984540054 * 1.959963984540054;
    CHECK(none.hi == doctest::Approx(z2 / (10.0 + z2)).epsilon(1e-12));
    const WilsonInterval half = wilson_interval(5, 10);
    CHECK(half.lo == doctest::Approx(0.2366).epsilon(1e-3));
    CHECK(half.hi == doctest::Approx(0.7634).epsilon(1e-3));
    CHECK(wilson_interval(0, 0).hi == 1.0);
    const WilsonInterval all = wilson_interval(10, 10);
    CHECK(all.hi == doctest::Approx(1.0));
    CHECK(all.lo == doctest::Approx(10.0 / (10.0 + z2)).epsilon(1e-12));
}

TEST_CASE("exponent fits on synthetic curves")
{
    const std::vector<Coord> radii{4, 8, 16, 32, 64, 128, 256, 512};
    const FitResult half = fit_exponent(synthetic(radii, [](double r) { return 1.0 / std::sqrt(r); }), 4, 512);
    CHECK(half.slope == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(half.points == 8);
    CHECK(half.stderr_slope < 1e-12);

    const FitResult two_thirds = fit_exponent(synthetic(radii, [](double r) { return 3.7 * std::pow(r, -2.0 / 3.0); }), 4, 512);
    CHECK(std::abs(two_thirds.slope + 2.0 / 3.0) < 1e-12);
    CHECK(std::exp(two_thirds.intercept) == doctest::Approx(3.7).epsilon(1e-10));

    const FitResult flat = fit_exponent(synthetic(radii, [](double) { return 0.25; }), 4, 512);
    CHECK(std::abs(flat.slope) < 1e-14);

    // Range restriction and zero survivors both drop points.
    SurvivalCurve c = synthetic(radii, [](double r) { return 1.0 / r; });
    c.p_hat[7] = 0.0;
    CHECK(fit_exponent(c, 8, 512).points == 6);
    CHECK_THROWS_AS(fit_exponent(c, 256, 512), DegenerateSample);
    CHECK_THROWS_AS(fit_exponent(c, 4, 8), DegenerateSample);
}

TEST_CASE("domination by the reference curve")
{
    const std::vector<Coord> radii{8, 16, 32, 64, 128};
    const DominationResult fast = check_domination(synthetic(radii, [](double r) { return 1.0 / r; }), 2, 8, 8, 128);
    CHECK(fast.dominated);
    CHECK(fast.constant == doctest::Approx(0.125 / theoretical_bound(8, 2, 1.0)));
    CHECK(fast.worst_ratio == doctest::Approx(1.0));

    const DominationResult rising =
        check_domination(synthetic(radii, [](double r) { return r * r / 40000.0; }), 2, 8, 8, 128);
    CHECK_FALSE(rising.dominated);
    CHECK(rising.worst_ratio > 1.0);

    CHECK_THROWS_AS(check_domination(synthetic(radii, [](double r) { return 1.0 / r; }), 2, 9, 8, 128), ArgumentError);
    CHECK_THROWS_AS(check_domination(synthetic(radii, [](double) { return 0.0; }), 2, 8, 8, 128), DegenerateSample);
}

TEST_CASE("survival accumulation by hand")
{
    // Line of 9: pairs (1,4) and (2,3); the rest unmatched.
    const Grid g = Grid::window(Site{0}, Site{9});
    const Configuration c = configuration_from_bits(g, {1, 0, 0, 1, 1, 0, 1, 1, 1});
    const StagedMatching m = staged_from_meshalkin(meshalkin_lift(c, 1));
    REQUIRE(m.base.partner[1] == 4);
    REQUIRE(m.base.partner[2] == 3);
    REQUIRE(m.base.partner[5] == 6);

    SurvivalAccumulator acc({1, 2, 3});
    acc.add(m, CensorPolicy::Exclude);
    const SurvivalCurve curve = acc.finish(1);
    // At risk at r: uncensored sites with boundary distance >= r. Sites 1..6 are
    // paired with Z = 3, 1, 1, 3, 1, 1; boundary distances 1, 2, 3, 4, 3, 2.
    CHECK(curve.at_risk == std::vector<std::uint64_t>{6, 5, 3});
    CHECK(curve.survivors == std::vector<std::uint64_t>{2, 1, 0});
    CHECK(curve.sites == 9);
    CHECK(curve.censored == 3);

    SurvivalAccumulator as_survivor({1, 2, 3});
    as_survivor.add(m, CensorPolicy::AsSurvivor);
    const SurvivalCurve s2 = as_survivor.finish(1);
    // Censored sites 0, 7, 8 have boundary distance 0, 1, 0.
    CHECK(s2.at_risk == std::vector<std::uint64_t>{7, 5, 3});
    CHECK(s2.survivors == std::vector<std::uint64_t>{3, 1, 0});

    SurvivalAccumulator other({1, 2});
    CHECK_THROWS_AS(acc.merge(other), ArgumentError);
    CHECK_THROWS_AS(SurvivalAccumulator({2, 2}), ArgumentError);
    CHECK_THROWS_AS(SurvivalAccumulator({}), ArgumentError);
}

TEST_CASE("meshalkin tail in one dimension")
{
    TailSpec spec;
    spec.rule = Rule::Meshalkin;
    spec.dim = 1;
    spec.side = 1 << 17;
    spec.geometry = GeometryKind::Torus;
    spec.trials = 8;
    spec.seed = 5;
    spec.radii = parse_radii("4..512:15");
    const SurvivalCurve c = estimate_tail(spec);
    CHECK(c.sites == 8u << 17);
    const FitResult f = fit_exponent(c, 4, 512);
    CHECK(f.slope == doctest::Approx(-0.5).epsilon(0.15));
    for (std::size_t i = 1; i < c.p_hat.size(); ++i) {
        CHECK(c.p_hat[i] <= c.p_hat[i - 1]);
    }
}

TEST_CASE("tail estimates are deterministic")
{
    TailSpec spec;
    spec.rule = Rule::Clump;
    spec.dim = 2;
    spec.side = 32;
    spec.geometry = GeometryKind::Window;
    spec.k_max = 3;
    spec.trials = 3;
    spec.seed = 9;
    spec.radii = {1, 2, 4, 8};
    setenv("EQM_THREADS", "1", 1);
    const SurvivalCurve a = estimate_tail(spec);
    setenv("EQM_THREADS", "3", 1);
    const SurvivalCurve b = estimate_tail(spec);
    unsetenv("EQM_THREADS");
    CHECK(a.survivors == b.survivors);
    CHECK(a.at_risk == b.at_risk);
    CHECK(a.p_hat == b.p_hat);
    CHECK(a.sites == 3 * 32 * 32);
}

TEST_CASE("degenerate and saturated samples")
{
    TailSpec tiny;
    tiny.rule = Rule::Clump;
    tiny.dim = 2;
    tiny.side = 8;
    tiny.geometry = GeometryKind::Torus;
    tiny.trials = 20;
    tiny.radii = {5, 6};
    // Torus distances never exceed 4.
    const SurvivalCurve c = estimate_tail(tiny);
    CHECK(c.survivors == std::vector<std::uint64_t>{0, 0});
    CHECK(c.at_risk.front() > 0);

    TailSpec small;
    small.rule = Rule::Meshalkin;
    small.dim = 2;
    small.side = 4;
    small.geometry = GeometryKind::Window;
    small.radii = {3, 4};
    CHECK_THROWS_AS(estimate_tail(small), DegenerateSample);

    small.trials = 0;
    CHECK_THROWS_AS(estimate_tail(small), ArgumentError);

    TailSpec over = tiny;
    over.k_max = 3;
    CHECK_THROWS_AS(estimate_tail(over), ArgumentError);
}

TEST_CASE("automatic K_max")
{
    // d = 1, half-width 32: the tail is 128 * 2^-K, below 1e-3 from K = 17.
    const KmaxChoice unlimited = choose_kmax(1, 64, 1e-3, 1e15);
    CHECK(unlimited.k_max == 17);
    CHECK(unlimited.meets_target);
    // The default budget stops where 102 r_K sites no longer fit.
    const KmaxChoice capped = choose_kmax(1, 64);
    CHECK(capped.k_max == 13);
    CHECK_FALSE(capped.meets_target);
    CHECK(capped.residual == truncation_bias(1, 13, 32.0));
}

TEST_CASE("seed density on a torus")
{
    const Configuration c = generate_configuration(2, Grid::torus(Site{256, 256}), 8, 0.5);
    const double n = static_cast<double>(c.size());
    for (int k = 1; k <= 5; ++k) {
        const double p = std::ldexp(1.0, -k);
        CHECK(std::abs(seed_density(c, k) - p) <= 4.0 * std::sqrt(p * (1.0 - p) / n));
    }
    const Configuration w = generate_configuration(1, Grid::window(Site{0}, Site{3}), 8, 0.5);
    CHECK(seed_density(w, 5) == 0.0);
}

TEST_CASE("radius lists")
{
    CHECK(parse_radii("1..4") == std::vector<Coord>{1, 2, 3, 4});
    CHECK(parse_radii("4..512:8") == std::vector<Coord>{4, 8, 16, 32, 64, 128, 256, 512});
    CHECK(parse_radii("1..3:10") == std::vector<Coord>{1, 2, 3});
    CHECK(parse_radii("1,5,9") == std::vector<Coord>{1, 5, 9});
    CHECK(parse_radii("7") == std::vector<Coord>{7});
    CHECK_THROWS_AS(parse_radii("5..2"), ArgumentError);
    CHECK_THROWS_AS(parse_radii("a"), ArgumentError);
    CHECK_THROWS_AS(parse_radii("3,2"), ArgumentError);
    CHECK_THROWS_AS(parse_radii("1..10:1"), ArgumentError);
    CHECK_THROWS_AS(parse_radii("0..4"), ArgumentError);
    CHECK_THROWS_AS(parse_radii(""), ArgumentError);
}
