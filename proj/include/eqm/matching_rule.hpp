#pragma once
// Staged matching over a clump hierarchy. At stage k = 1..K_max the unmatched
// heads and tails of every k-clump are sorted by position and paired i-th with
// i-th; a final cleanup stage K_max + 1 pairs whatever is left across the core.
//
// Positions are compared lexicographically. On a window that is plain
// coordinate order. On a torus coordinates are taken relative to an anchor
// chosen from the configuration itself (the site from which the whole field
// reads smallest), which keeps the rule exactly translation-equivariant.

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "eqm/clumping.hpp"
#include "eqm/meshalkin.hpp"

namespace eqm {

inline constexpr std::int32_t kNeverGood = -1; // bad_level "infinity"

struct StagedMatching {
    Matching base;
    int k_max = 0;
    // Smallest k at which the site is matched; kNeverGood when matched only by
    // cleanup or not at all.
    std::vector<std::int32_t> bad_level;
    // 1 when the pair is known to be the pair of the untruncated rule: on a
    // window the site's clump at its pairing stage stays clear of the core
    // boundary; on a torus every stage <= K_max.
    std::vector<std::uint8_t> exact;
    std::vector<std::size_t> stage_pairs; // index = stage

    const Grid& grid() const { return base.grid; }
};

// Positions of the core sites in the order used for pairing (rank per index).
std::vector<std::uint32_t> pairing_order(const Configuration& c, const Grid& core);
// Torus anchor: index of the site from which the configuration reads smallest
// in row-major order. Ties (periodic configurations) go to the lowest index.
std::size_t torus_anchor(const Configuration& c);

StagedMatching build_matching(const Configuration& c, const ClumpHierarchy& h);

// Meshalkin pairs viewed through the same statistics interface: every pair is
// exact, unmatched sites are censored.
StagedMatching staged_from_meshalkin(Matching m);

struct Displacement {
    Coord distance = 0;
    bool censored = false; // distance is then only a lower bound
};

// l-infinity distance to the partner. Unmatched sites and cleanup pairs come
// back censored with lower bound min(partner distance, distance to the window
// boundary + 1). With `exact_only`, pairs not marked exact are censored too.
Displacement displacement(const StagedMatching& m, std::size_t site, bool exact_only = false);

inline bool k_bad(const StagedMatching& m, std::size_t site, int k)
{
    const std::int32_t b = m.bad_level[site];
    return b == kNeverGood || b > k;
}

struct ClumpDiscrepancy {
    std::size_t clump = 0; // representative site index
    std::size_t size = 0;
    std::int64_t zeta = 0; // heads minus tails
};

// One record per k-clump, in order of representative index. Computed from the
// bits alone, independently of any matching.
std::vector<ClumpDiscrepancy> clump_discrepancies(const Configuration& c, const ClumpHierarchy& h, int k);

// theta^z applied to a torus matching: partner'(x + z) = partner(x) + z.
Matching translate_matching(const Matching& m, const Site& z);

// Sites, pairs, pairs per stage, censored count and truncation data.
nlohmann::json matching_summary(const StagedMatching& m, const ClumpHierarchy* h = nullptr);

// Bits of the core sites in core index order.
std::vector<std::uint8_t> core_bits(const Configuration& c, const Grid& core);

} // namespace eqm
