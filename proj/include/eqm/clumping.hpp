#pragma once
// Seeds, cutters and the clump hierarchy.
//
// A k-seed is a head followed by k-1 tails along e_1. Each k-seed p induces a
// k-cutter: the l-infinity sphere of radius r_k around p + s_k. The radius is
// never an integer, so every site is strictly inside or strictly outside. A
// k-clump is a connected component of the sites under lattice edges that no
// cutter of level > k separates; edges are labelled with the largest level
// that separates them and merged Kruskal-style in increasing label order.

#include <cstdint>
#include <vector>

#include "eqm/lattice.hpp"

namespace eqm {

// r_k = (2^k k^2)^(1/d) + 1/2.
double radius_r(int k, int d);
// s_k = floor(100 r_k) e_1.
Site shift_s(int k, int d);
// Number of lattice points y with ||y||_inf <= rho (0 for rho < 0).
double lattice_count(int d, double rho);
// N_k(s) = |S(r_k + s)| - |S(r_k - s)|.
double annulus_count(int k, int d, double s);

struct SeedRecord {
    Site position;
    int level = 0;

    bool operator==(const SeedRecord&) const = default;
};

struct Cutter {
    Site center;
    int level = 0;
    double radius = 0.0;
};

// True iff p is a k-seed of the field read through `bit`.
template <class BitFn>
bool is_seed(const BitFn& bit, const Site& p, int k)
{
    if (!bit(p)) {
        return false;
    }
    Site q = p;
    for (int n = 1; n < k; ++n) {
        ++q[0];
        if (bit(q)) {
            return false;
        }
    }
    return true;
}

// All k-seeds of the configuration. On a window, only seeds whose whole shell
// lies inside the generated region are reported; on a torus shells wrap.
std::vector<SeedRecord> find_seeds(const Configuration& c, int k);
// Seeds with position in the box [lo, hi] (inclusive). Window positions whose
// shell leaves the region raise UndecidableError.
std::vector<SeedRecord> find_seeds(const Configuration& c, int k, const Site& lo, const Site& hi);

// Level-k cutters whose sphere separates at least one pair of core sites
// (window core), or every level-k cutter (torus core = the torus itself).
std::vector<Cutter> cutters_for_level(const Configuration& c, int k, const Grid& core);
std::vector<Cutter> cutters_for_level(const Configuration& c, int k, const BoxRegion& core);

bool site_inside(const Cutter& cut, const Site& x, const Grid& geometry);
// Exactly one endpoint strictly inside. x and y must be lattice neighbours.
bool edge_separated_by(const Cutter& cut, const Site& x, const Site& y);
bool edge_separated_by(const Cutter& cut, const Site& x, const Site& y, const Grid& geometry);

// Cut level per lattice edge of a core grid. Edge (x, x + e_axis) is keyed by
// its lower endpoint x.
class EdgeCutLevels {
public:
    EdgeCutLevels(Grid core, int k_max);

    const Grid& grid() const { return grid_; }
    int k_max() const { return k_max_; }
    std::uint8_t level(std::size_t lower, int axis) const { return by_axis_[static_cast<std::size_t>(axis)][lower]; }
    void raise(std::size_t lower, int axis, int level);
    // Symmetric lookup for neighbouring sites.
    int between(const Site& x, const Site& y) const;
    bool operator==(const EdgeCutLevels& o) const { return grid_ == o.grid_ && by_axis_ == o.by_axis_; }

private:
    Grid grid_;
    int k_max_;
    std::vector<std::vector<std::uint8_t>> by_axis_;
};

// Writes the cutter's level into every core edge its sphere crosses,
// visiting only the O(r^(d-1)) face edges.
void rasterize_cutter(const Cutter& cut, EdgeCutLevels& levels);

// Generated region a window core needs so that every cutter of level <= k_max
// that can touch the core has its seed shell inside.
Grid required_region(const Grid& core, int k_max);
// Symmetric margin equivalent of k_max: ceil(102 r_K) + K.
Coord margin_for_kmax(int k_max, int d);
// Largest K >= 1 with margin_for_kmax(K, d) <= margin.
int kmax_for_margin(Coord margin, int d);
// Largest K with r_k <= min side / 2 (at least 1).
int max_torus_kmax(int d, Coord min_side);

// For a torus core the configuration grid must be that torus; K_max is capped
// by max_torus_kmax.
EdgeCutLevels compute_edge_cutlevels(const Configuration& c, int k_max, const Grid& core);

// Sum over j > K_max of N_j(s) 2^-j: union bound on an omitted cutter
// crossing S(s).
double truncation_bias(int d, int k_max, double s);
double truncation_bias(const Configuration& c, int k_max, double s);

struct TruncationReport {
    int k_max = 0;
    Coord halo_margin = 0;
    double residual_bound = 0.0;
};

// Merge forest over the core sites. Links carry the level at which two
// components merged; following links of level <= k from x reaches the
// representative of x's k-clump.
class ClumpHierarchy {
public:
    const Grid& grid() const { return grid_; }
    int k_max() const { return k_max_; }
    const TruncationReport& truncation() const { return report_; }
    std::size_t size() const { return parent_.size(); }

    // Representative site index of the level-k clump containing `site`.
    std::size_t clump_id(std::size_t site, int level) const;
    std::vector<std::size_t> labels(int level) const;
    std::size_t clump_count(int level) const;
    // Number of roots forced together above K_max (0 for a connected core).
    std::size_t forced_merges() const { return forced_merges_; }

private:
    friend ClumpHierarchy build_hierarchy(const EdgeCutLevels& e, TruncationReport report);

    Grid grid_;
    int k_max_ = 0;
    TruncationReport report_;
    std::vector<std::uint32_t> parent_;
    std::vector<std::int16_t> link_level_;
    std::size_t forced_merges_ = 0;
};

ClumpHierarchy build_hierarchy(const EdgeCutLevels& e, TruncationReport report = {});

// Cut levels, hierarchy and truncation accounting in one call.
ClumpHierarchy build_clump_hierarchy(const Configuration& c, int k_max, const Grid& core);

} // namespace eqm
