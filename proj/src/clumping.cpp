#include "eqm/clumping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "eqm/errors.hpp"

namespace eqm {

namespace {

void require_level(int k)
{
    if (k < 1) {
        throw ArgumentError("level k must be >= 1");
    }
}

// Visits every site of the inclusive box [lo, hi] in row-major order.
template <class Fn>
void for_each_in_box(const Site& lo, const Site& hi, Fn&& fn)
{
    const int d = lo.dim();
    for (int a = 0; a < d; ++a) {
        if (hi[a] < lo[a]) {
            return;
        }
    }
    Site x = lo;
    for (;;) {
        fn(x);
        int a = d - 1;
        while (a >= 0) {
            if (++x[a] <= hi[a]) {
                break;
            }
            x[a] = lo[a];
            --a;
        }
        if (a < 0) {
            return;
        }
    }
}

Coord ceil_radius(double r)
{
    return static_cast<Coord>(std::floor(r)) + 1;
}

} // namespace

double radius_r(int k, int d)
{
    require_level(k);
    if (d < 1) {
        throw ArgumentError("dimension must be >= 1");
    }
    const double v = std::ldexp(static_cast<double>(k) * static_cast<double>(k), k);
    if (!std::isfinite(v)) {
        throw RangeError("r_k overflows a double for k = " + std::to_string(k));
    }
    double root = 0.0;
    switch (d) {
    case 1:
        root = v;
        break;
    case 2:
        root = std::sqrt(v);
        break;
    case 3:
        root = std::cbrt(v);
        break;
    default:
        root = std::pow(v, 1.0 / d);
    }
    return root + 0.5;
}

Site shift_s(int k, int d)
{
    const double shifted = std::floor(100.0 * radius_r(k, d));
    if (shifted >= 9.0e18) {
        throw RangeError("s_k does not fit a lattice coordinate for k = " + std::to_string(k));
    }
    Site s(d);
    s[0] = static_cast<Coord>(shifted);
    return s;
}

double lattice_count(int d, double rho)
{
    if (rho < 0.0) {
        return 0.0;
    }
    return std::pow(2.0 * std::floor(rho) + 1.0, d);
}

double annulus_count(int k, int d, double s)
{
    const double r = radius_r(k, d);
    const double a = 2.0 * std::floor(r + s) + 1.0;
    const double b = r - s >= 0.0 ? 2.0 * std::floor(r - s) + 1.0 : 0.0;
    // a^d - b^d without cancellation.
    double sum = 0.0;
    for (int i = 0; i < d; ++i) {
        sum += std::pow(a, d - 1 - i) * std::pow(b, i);
    }
    return (a - b) * sum;
}

// ---------------------------------------------------------------------------

std::vector<SeedRecord> find_seeds(const Configuration& c, int k)
{
    require_level(k);
    const Grid& g = c.grid();
    Site hi = g.upper();
    if (!g.periodic()) {
        hi[0] -= k - 1;
    }
    if (hi[0] < g.lower()[0]) {
        return {};
    }
    return find_seeds(c, k, g.lower(), hi);
}

std::vector<SeedRecord> find_seeds(const Configuration& c, int k, const Site& lo, const Site& hi)
{
    require_level(k);
    const Grid& g = c.grid();
    const int d = g.dim();
    std::vector<SeedRecord> out;
    for (int a = 0; a < d; ++a) {
        if (hi[a] < lo[a]) {
            return out;
        }
    }

    if (g.periodic()) {
        Site top = hi;
        for (int a = 0; a < d; ++a) {
            top[a] = std::min(hi[a], lo[a] + g.sides()[a] - 1);
        }
        const auto bit = [&](const Site& x) { return c.bit(g.index(x)); };
        for_each_in_box(lo, top, [&](const Site& p) {
            if (is_seed(bit, p, k)) {
                out.push_back({g.wrap(p), k});
            }
        });
        return out;
    }

    Site shell_end = hi;
    shell_end[0] += k - 1;
    if (!g.contains(lo) || !g.contains(shell_end)) {
        throw UndecidableError("seed search box for level " + std::to_string(k) + " leaves the generated region");
    }
    const std::size_t stride0 = g.stride(0);
    const int last = d - 1;
    const Coord row_len = hi[last] - lo[last] + 1;
    Site row_lo = lo;
    Site row_hi = hi;
    row_hi[last] = lo[last];
    for_each_in_box(row_lo, row_hi, [&](const Site& start) {
        std::size_t idx = g.index(start);
        for (Coord t = 0; t < row_len; ++t, ++idx) {
            if (!c.bit(idx)) {
                continue;
            }
            bool seed = true;
            for (int n = 1; n < k; ++n) {
                if (c.bit(idx + static_cast<std::size_t>(n) * stride0)) {
                    seed = false;
                    break;
                }
            }
            if (seed) {
                Site p = start;
                p[last] += t;
                out.push_back({p, k});
            }
        }
    });
    return out;
}

std::vector<Cutter> cutters_for_level(const Configuration& c, int k, const Grid& core)
{
    require_level(k);
    const int d = c.dim();
    if (core.dim() != d) {
        throw ArgumentError("core dimension mismatch");
    }
    const double r = radius_r(k, d);
    const Site s = shift_s(k, d);
    std::vector<Cutter> out;

    if (core.periodic()) {
        if (!(core == c.grid())) {
            throw ArgumentError("a torus core must be the configuration's own torus");
        }
        for (const auto& seed : find_seeds(c, k)) {
            out.push_back({core.wrap(seed.position + s), k, r});
        }
        return out;
    }

    const Coord reach = ceil_radius(r);
    const Coord inner = reach - 1; // sites with |delta| <= inner are inside
    const Site lo = core.lower() - Site::filled(d, reach) - s;
    const Site hi = core.upper() + Site::filled(d, reach) - s;
    const Site core_lo = core.lower();
    const Site core_hi = core.upper();
    for (const auto& seed : find_seeds(c, k, lo, hi)) {
        const Site center = seed.position + s;
        bool some_inside = true;
        bool some_outside = false;
        for (int a = 0; a < d; ++a) {
            if (center[a] + inner < core_lo[a] || center[a] - inner > core_hi[a]) {
                some_inside = false;
            }
            if (core_lo[a] < center[a] - inner || core_hi[a] > center[a] + inner) {
                some_outside = true;
            }
        }
        if (some_inside && some_outside) {
            out.push_back({center, k, r});
        }
    }
    return out;
}

std::vector<Cutter> cutters_for_level(const Configuration& c, int k, const BoxRegion& core)
{
    const auto half = static_cast<Coord>(std::floor(core.radius));
    const int d = core.center.dim();
    return cutters_for_level(
        c, k, Grid::window(core.center - Site::filled(d, half), Site::filled(d, 2 * half + 1)));
}

bool site_inside(const Cutter& cut, const Site& x, const Grid& geometry)
{
    return static_cast<double>(geometry.distance(x, cut.center)) < cut.radius;
}

bool edge_separated_by(const Cutter& cut, const Site& x, const Site& y)
{
    if (x.dim() != y.dim() || x.dim() != cut.center.dim()) {
        throw ArgumentError("dimension mismatch");
    }
    Coord l1 = 0;
    for (int a = 0; a < x.dim(); ++a) {
        l1 += std::abs(x[a] - y[a]);
    }
    if (l1 != 1) {
        throw ArgumentError("edge endpoints " + to_string(x) + ", " + to_string(y) + " are not adjacent");
    }
    const bool in_x = static_cast<double>(linf_distance(x, cut.center)) < cut.radius;
    const bool in_y = static_cast<double>(linf_distance(y, cut.center)) < cut.radius;
    return in_x != in_y;
}

bool edge_separated_by(const Cutter& cut, const Site& x, const Site& y, const Grid& geometry)
{
    if (!geometry.periodic()) {
        return edge_separated_by(cut, x, y);
    }
    const std::size_t ix = geometry.index(x);
    const std::size_t iy = geometry.index(y);
    bool adjacent = false;
    for (int a = 0; a < geometry.dim() && !adjacent; ++a) {
        adjacent = geometry.step(ix, a) == iy || geometry.step(iy, a) == ix;
    }
    if (!adjacent) {
        throw ArgumentError("edge endpoints are not torus neighbours");
    }
    return site_inside(cut, x, geometry) != site_inside(cut, y, geometry);
}

// ---------------------------------------------------------------------------

EdgeCutLevels::EdgeCutLevels(Grid core, int k_max) : grid_(std::move(core)), k_max_(k_max)
{
    if (k_max < 1 || k_max > 255) {
        throw ArgumentError("K_max must be in [1, 255]");
    }
    by_axis_.assign(static_cast<std::size_t>(grid_.dim()), std::vector<std::uint8_t>(grid_.size(), 0));
}

void EdgeCutLevels::raise(std::size_t lower, int axis, int level)
{
    auto& slot = by_axis_[static_cast<std::size_t>(axis)][lower];
    slot = std::max<std::uint8_t>(slot, static_cast<std::uint8_t>(level));
}

int EdgeCutLevels::between(const Site& x, const Site& y) const
{
    const std::size_t ix = grid_.index(x);
    const std::size_t iy = grid_.index(y);
    for (int a = 0; a < grid_.dim(); ++a) {
        if (grid_.step(ix, a) == iy) {
            return level(ix, a);
        }
        if (grid_.step(iy, a) == ix) {
            return level(iy, a);
        }
    }
    throw ArgumentError("sites " + to_string(x) + ", " + to_string(y) + " do not share a core edge");
}

void rasterize_cutter(const Cutter& cut, EdgeCutLevels& levels)
{
    const Grid& g = levels.grid();
    const int d = g.dim();
    const Coord m = ceil_radius(cut.radius) - 1;
    const Site glo = g.lower();
    const Site ghi = g.upper();

    for (int i = 0; i < d; ++i) {
        if (g.periodic() && 2 * m + 1 >= g.sides()[i]) {
            continue; // every residue along axis i is inside
        }
        for (const Coord face : {cut.center[i] + m, cut.center[i] - m - 1}) {
            Site lo(d);
            Site hi(d);
            bool empty = false;
            for (int j = 0; j < d; ++j) {
                if (j == i) {
                    lo[j] = hi[j] = face;
                    if (!g.periodic() && (face < glo[j] || face + 1 > ghi[j])) {
                        empty = true;
                    }
                    continue;
                }
                if (g.periodic()) {
                    const Coord span = std::min<Coord>(2 * m + 1, g.sides()[j]);
                    lo[j] = cut.center[j] - m;
                    hi[j] = lo[j] + span - 1;
                } else {
                    lo[j] = std::max(cut.center[j] - m, glo[j]);
                    hi[j] = std::min(cut.center[j] + m, ghi[j]);
                    empty = empty || lo[j] > hi[j];
                }
            }
            if (empty) {
                continue;
            }
            for_each_in_box(lo, hi, [&](const Site& x) { levels.raise(g.index(x), i, cut.level); });
        }
    }
}

Grid required_region(const Grid& core, int k_max)
{
    if (core.periodic()) {
        return core;
    }
    if (k_max < 2) {
        return core;
    }
    const int d = core.dim();
    const Coord reach = ceil_radius(radius_r(k_max, d));
    const Site s = shift_s(k_max, d);
    Site lo = core.lower() - Site::filled(d, reach);
    lo[0] -= s[0];
    Site hi = core.upper() + Site::filled(d, reach);
    hi[0] = core.upper()[0];
    Site sides(d);
    for (int a = 0; a < d; ++a) {
        sides[a] = hi[a] - lo[a] + 1;
    }
    return Grid::window(lo, sides);
}

Coord margin_for_kmax(int k_max, int d)
{
    return static_cast<Coord>(std::ceil(102.0 * radius_r(k_max, d))) + k_max;
}

int kmax_for_margin(Coord margin, int d)
{
    int k = 1;
    while (k < 255 && margin_for_kmax(k + 1, d) <= margin) {
        ++k;
    }
    return k;
}

int max_torus_kmax(int d, Coord min_side)
{
    int k = 1;
    while (k < 255 && radius_r(k + 1, d) <= static_cast<double>(min_side) / 2.0) {
        ++k;
    }
    return k;
}

EdgeCutLevels compute_edge_cutlevels(const Configuration& c, int k_max, const Grid& core)
{
    EdgeCutLevels levels(core, k_max);
    if (core.periodic()) {
        if (!(core == c.grid())) {
            throw ArgumentError("a torus core must be the configuration's own torus");
        }
        if (k_max > max_torus_kmax(core.dim(), core.min_side())) {
            throw ArgumentError("K_max too large for this torus: need r_k <= min side / 2");
        }
    } else {
        const Grid need = required_region(core, k_max);
        if (!c.grid().contains(need.lower()) || !c.grid().contains(need.upper()) || c.grid().periodic()) {
            throw UndecidableError("generated region does not cover the cutter halo for K_max = " +
                                   std::to_string(k_max) + "; enlarge the margin");
        }
    }
    for (int k = 2; k <= k_max; ++k) {
        for (const auto& cut : cutters_for_level(c, k, core)) {
            rasterize_cutter(cut, levels);
        }
    }
    return levels;
}

double truncation_bias(int d, int k_max, double s)
{
    if (k_max < 1 || s < 0.0) {
        throw ArgumentError("truncation_bias needs K_max >= 1 and s >= 0");
    }
    double total = 0.0;
    double previous = std::numeric_limits<double>::infinity();
    for (int j = k_max + 1;; ++j) {
        double term = 0.0;
        double r = 0.0;
        try {
            r = radius_r(j, d);
            term = std::ldexp(annulus_count(j, d, s), -j);
        } catch (const RangeError&) {
            throw RangeError("truncation tail did not converge before r_j overflowed");
        }
        total += term;
        if (term < 1e-15 && term <= previous && r > s) {
            break;
        }
        previous = term;
    }
    return total;
}

double truncation_bias(const Configuration& c, int k_max, double s)
{
    return truncation_bias(c.dim(), k_max, s);
}

// ---------------------------------------------------------------------------

std::size_t ClumpHierarchy::clump_id(std::size_t site, int level) const
{
    std::size_t x = site;
    while (parent_[x] != x && link_level_[x] <= level) {
        x = parent_[x];
    }
    return x;
}

std::vector<std::size_t> ClumpHierarchy::labels(int level) const
{
    std::vector<std::size_t> out(parent_.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = clump_id(i, level);
    }
    return out;
}

std::size_t ClumpHierarchy::clump_count(int level) const
{
    std::size_t n = 0;
    for (std::size_t i = 0; i < parent_.size(); ++i) {
        n += (parent_[i] == i || link_level_[i] > level) ? 1 : 0;
    }
    return n;
}

ClumpHierarchy build_hierarchy(const EdgeCutLevels& e, TruncationReport report)
{
    const Grid& g = e.grid();
    const std::size_t n = g.size();
    if (n > std::numeric_limits<std::uint32_t>::max()) {
        throw ArgumentError("core too large for the merge forest");
    }
    const int d = g.dim();
    const int k_max = e.k_max();

    ClumpHierarchy h;
    h.grid_ = g;
    h.k_max_ = k_max;
    report.k_max = k_max;
    h.report_ = report;
    h.parent_.resize(n);
    std::iota(h.parent_.begin(), h.parent_.end(), 0U);
    h.link_level_.assign(n, std::numeric_limits<std::int16_t>::max());

    std::vector<std::uint32_t> dsu(h.parent_);
    std::vector<std::uint8_t> rank(n, 0);
    const auto find = [&](std::uint32_t x) {
        std::uint32_t root = x;
        while (dsu[root] != root) {
            root = dsu[root];
        }
        while (dsu[x] != root) {
            const std::uint32_t next = dsu[x];
            dsu[x] = root;
            x = next;
        }
        return root;
    };
    const auto unite = [&](std::uint32_t a, std::uint32_t b, int level) {
        std::uint32_t ra = find(a);
        std::uint32_t rb = find(b);
        if (ra == rb) {
            return false;
        }
        if (rank[ra] < rank[rb]) {
            std::swap(ra, rb);
        }
        h.parent_[rb] = ra;
        h.link_level_[rb] = static_cast<std::int16_t>(level);
        dsu[rb] = ra;
        if (rank[ra] == rank[rb]) {
            ++rank[ra];
        }
        return true;
    };

    // Counting sort of edges by merge level max(cutlevel, 1).
    std::vector<std::size_t> count(static_cast<std::size_t>(k_max) + 2, 0);
    for (int a = 0; a < d; ++a) {
        for (std::size_t i = 0; i < n; ++i) {
            if (g.step(i, a)) {
                ++count[std::max<std::size_t>(e.level(i, a), 1)];
            }
        }
    }
    std::vector<std::size_t> offset(count.size() + 1, 0);
    for (std::size_t l = 0; l < count.size(); ++l) {
        offset[l + 1] = offset[l] + count[l];
    }
    std::vector<std::uint64_t> edges(offset.back());
    std::vector<std::size_t> fill(offset.begin(), offset.end() - 1);
    for (int a = 0; a < d; ++a) {
        for (std::size_t i = 0; i < n; ++i) {
            if (g.step(i, a)) {
                edges[fill[std::max<std::size_t>(e.level(i, a), 1)]++] =
                    static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(d) + static_cast<std::uint64_t>(a);
            }
        }
    }
    for (int level = 1; level <= k_max; ++level) {
        for (std::size_t t = offset[static_cast<std::size_t>(level)]; t < offset[static_cast<std::size_t>(level) + 1];
             ++t) {
            const std::size_t i = edges[t] / static_cast<std::uint64_t>(d);
            const int a = static_cast<int>(edges[t] % static_cast<std::uint64_t>(d));
            unite(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(*g.step(i, a)), level);
        }
    }

    // Components still apart after K_max are forced together one level up.
    std::uint32_t first_root = std::numeric_limits<std::uint32_t>::max();
    for (std::uint32_t i = 0; i < n; ++i) {
        if (find(i) != i) {
            continue;
        }
        if (first_root == std::numeric_limits<std::uint32_t>::max()) {
            first_root = i;
        } else if (unite(first_root, i, k_max + 1)) {
            ++h.forced_merges_;
        }
    }
    return h;
}

ClumpHierarchy build_clump_hierarchy(const Configuration& c, int k_max, const Grid& core)
{
    const EdgeCutLevels levels = compute_edge_cutlevels(c, k_max, core);
    TruncationReport report;
    report.k_max = k_max;
    if (core.periodic()) {
        report.halo_margin = 0;
        report.residual_bound = truncation_bias(core.dim(), k_max, static_cast<double>(core.min_side()) / 2.0);
    } else {
        const int d = core.dim();
        report.halo_margin =
            k_max >= 2 ? shift_s(k_max, d)[0] + static_cast<Coord>(std::floor(radius_r(k_max, d))) + 1 : 0;
        Coord widest = 0;
        for (int a = 0; a < d; ++a) {
            widest = std::max(widest, core.sides()[a]);
        }
        report.residual_bound = truncation_bias(d, k_max, static_cast<double>(widest) / 2.0);
    }
    return build_hierarchy(levels, report);
}

} // namespace eqm
