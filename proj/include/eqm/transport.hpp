#pragma once
// Exact bookkeeping on tori: mass sent out versus mass received, and the
// k-bad identity (fraction of k-bad sites equals the site average of
// |zeta| / size over the k-clumps).

#include <cstdint>
#include <functional>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "eqm/matching_rule.hpp"

namespace eqm {

using Rational = boost::multiprecision::cpp_rational;

// A transport given as a pure function of (source, target) site indices,
// together with the targets each source may send to.
struct Transport {
    std::function<std::vector<std::size_t>(std::size_t)> support;
    std::function<Rational(std::size_t, std::size_t)> mass;
};

struct TransportTotals {
    Rational out_mass;             // sum over sources of mass sent
    Rational in_mass;              // sum over targets of mass received
    std::vector<Rational> received; // per target
    std::size_t sites = 0;
};

// Throws ContractViolation on negative mass, UnsupportedGeometry off a torus.
TransportTotals verify_mass_transport(const Configuration& c, const Transport& t);

// Heads keep their unit; tails send theirs to their partner.
Transport matching_transport(const Configuration& c, const Matching& m);
// k-bad sites spread one unit uniformly over their k-clump.
Transport kbad_transport(const StagedMatching& m, const ClumpHierarchy& h, int k);

struct RationalPair {
    Rational lhs;
    Rational rhs;
};

// lhs = (1/N) #{k-bad sites}, from the matching; rhs = (1/N) sum over sites of
// |zeta(L_k(x))| / |L_k(x)|, from the bits and clumps alone.
RationalPair verify_kbad_identity(const Configuration& c, const ClumpHierarchy& h, const StagedMatching& m, int k);

// Mean fraction of torus sites the full rule (with cleanup) leaves unmatched
// at head probability p.
double biased_unmatched_fraction(double p, int d, Coord side, std::uint64_t trials, std::uint64_t seed);

// Rejection-samples a torus configuration with equally many heads and tails.
Configuration balanced_torus(int d, Coord side, std::uint64_t seed, std::uint64_t* attempts = nullptr);

} // namespace eqm
