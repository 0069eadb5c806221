#include "eqm/matching_rule.hpp"

#include <algorithm>
#include <limits>
#include <tuple>

#include "eqm/errors.hpp"

namespace eqm {

std::vector<std::uint8_t> core_bits(const Configuration& c, const Grid& core)
{
    std::vector<std::uint8_t> bits(core.size());
    if (core == c.grid()) {
        for (std::size_t i = 0; i < bits.size(); ++i) {
            bits[i] = c.bit(i) ? 1 : 0;
        }
        return bits;
    }
    if (core.periodic() || c.grid().periodic() || core.dim() != c.dim() || !c.covers(core.lower()) ||
        !c.covers(core.upper())) {
        throw ArgumentError("configuration does not cover the matching core");
    }
    const Grid& g = c.grid();
    for (std::size_t i = 0; i < bits.size(); ++i) {
        bits[i] = c.bit(g.index(core.site(i))) ? 1 : 0;
    }
    return bits;
}

std::size_t torus_anchor(const Configuration& c)
{
    const Grid& g = c.grid();
    const std::size_t n = g.size();
    const std::size_t ones = c.ones();
    if (ones == 0 || ones == n) {
        return 0;
    }
    const auto shifted = [&](std::size_t i, const Site& x) { return c.bit(g.index(g.site(i) + x)); };
    std::size_t best = 0;
    Site best_site = g.site(0);
    for (std::size_t cand = 1; cand < n; ++cand) {
        const Site x = g.site(cand);
        for (std::size_t i = 0; i < n; ++i) {
            const bool a = shifted(i, x);
            const bool b = shifted(i, best_site);
            if (a != b) {
                if (!a) {
                    best = cand;
                    best_site = x;
                }
                break;
            }
        }
    }
    return best;
}

std::vector<std::uint32_t> pairing_order(const Configuration& c, const Grid& core)
{
    const std::size_t n = core.size();
    if (n > std::numeric_limits<std::uint32_t>::max()) {
        throw ArgumentError("core too large for the pairing order");
    }
    std::vector<std::uint32_t> rank(n);
    if (!core.periodic()) {
        for (std::size_t i = 0; i < n; ++i) {
            rank[i] = static_cast<std::uint32_t>(i);
        }
        return rank;
    }
    if (!(core == c.grid())) {
        throw ArgumentError("torus core must be the configuration's torus");
    }
    const Site anchor = core.site(torus_anchor(c));
    for (std::size_t i = 0; i < n; ++i) {
        rank[i] = static_cast<std::uint32_t>(core.index(core.site(i) - anchor));
    }
    return rank;
}

namespace {

bool on_window_boundary(const Grid& g, const Site& x)
{
    const Site hi = g.upper();
    for (int a = 0; a < g.dim(); ++a) {
        if (x[a] == g.lower()[a] || x[a] == hi[a]) {
            return true;
        }
    }
    return false;
}

} // namespace

StagedMatching build_matching(const Configuration& c, const ClumpHierarchy& h)
{
    const Grid& core = h.grid();
    if (core.dim() != c.dim()) {
        throw ArgumentError("hierarchy and configuration differ in dimension");
    }
    const std::vector<std::uint8_t> bits = core_bits(c, core);
    const std::vector<std::uint32_t> rank = pairing_order(c, core);
    const std::size_t n = core.size();
    const int k_max = h.k_max();

    StagedMatching m;
    m.base = Matching(core);
    m.k_max = k_max;
    m.bad_level.assign(n, kNeverGood);
    m.exact.assign(n, 0);
    m.stage_pairs.assign(static_cast<std::size_t>(k_max) + 2, 0);

    std::vector<std::size_t> boundary;
    if (!core.periodic()) {
        for (std::size_t i = 0; i < n; ++i) {
            if (on_window_boundary(core, core.site(i))) {
                boundary.push_back(i);
            }
        }
    }
    std::vector<std::uint8_t> touches(n, 0);

    std::vector<std::size_t> alive(n);
    for (std::size_t i = 0; i < n; ++i) {
        alive[i] = i;
    }
    // (clump, rank, site)
    std::vector<std::tuple<std::size_t, std::uint32_t, std::size_t>> entries;
    std::vector<std::size_t> heads;
    std::vector<std::size_t> tails;

    for (int stage = 1; stage <= k_max + 1 && !alive.empty(); ++stage) {
        const bool cleanup = stage > k_max;
        entries.clear();
        for (std::size_t i : alive) {
            entries.emplace_back(cleanup ? 0 : h.clump_id(i, stage), rank[i], i);
        }
        std::sort(entries.begin(), entries.end());

        if (!cleanup && !core.periodic()) {
            for (std::size_t b : boundary) {
                touches[h.clump_id(b, stage)] = 1;
            }
        }

        std::vector<std::size_t> next;
        std::size_t g0 = 0;
        while (g0 < entries.size()) {
            std::size_t g1 = g0;
            heads.clear();
            tails.clear();
            while (g1 < entries.size() && std::get<0>(entries[g1]) == std::get<0>(entries[g0])) {
                const std::size_t i = std::get<2>(entries[g1]);
                (bits[i] ? heads : tails).push_back(i);
                ++g1;
            }
            const std::size_t pairs = std::min(heads.size(), tails.size());
            const bool trusted = !cleanup && (core.periodic() || !touches[std::get<0>(entries[g0])]);
            for (std::size_t t = 0; t < pairs; ++t) {
                m.base.pair(heads[t], tails[t], stage);
                for (std::size_t s : {heads[t], tails[t]}) {
                    m.bad_level[s] = cleanup ? kNeverGood : stage;
                    m.exact[s] = trusted ? 1 : 0;
                }
            }
            m.stage_pairs[static_cast<std::size_t>(stage)] += pairs;
            for (std::size_t t = pairs; t < heads.size(); ++t) {
                next.push_back(heads[t]);
            }
            for (std::size_t t = pairs; t < tails.size(); ++t) {
                next.push_back(tails[t]);
            }
            g0 = g1;
        }
        alive.swap(next);

        if (!cleanup && !core.periodic()) {
            for (std::size_t b : boundary) {
                touches[h.clump_id(b, stage)] = 0;
            }
        }
    }
    m.base.close();
    return m;
}

StagedMatching staged_from_meshalkin(Matching base)
{
    StagedMatching m;
    const std::size_t n = base.grid.size();
    m.k_max = 0;
    m.bad_level.assign(n, kNeverGood);
    m.exact.assign(n, 0);
    m.stage_pairs.assign(1, base.pair_count());
    for (std::size_t i = 0; i < n; ++i) {
        if (base.matched(i)) {
            m.bad_level[i] = 0;
            m.exact[i] = 1;
        }
    }
    m.base = std::move(base);
    return m;
}

Displacement displacement(const StagedMatching& m, std::size_t site, bool exact_only)
{
    const Grid& g = m.grid();
    const Matching& b = m.base;
    if (!b.matched(site) && !b.censored[site]) {
        throw ConsistencyError("site " + to_string(g.site(site)) + " is unmatched but not censored");
    }
    const Site x = g.site(site);
    const Coord to_partner =
        b.matched(site) ? g.distance(x, g.site(static_cast<std::size_t>(b.partner[site]))) : std::numeric_limits<Coord>::max();
    const bool trusted = exact_only ? m.exact[site] != 0 : b.stage[site] <= m.k_max;
    if (b.matched(site) && trusted) {
        return {to_partner, false};
    }
    if (g.periodic()) {
        return {b.matched(site) ? to_partner : 0, true};
    }
    return {std::min(to_partner, g.boundary_distance(x) + 1), true};
}

std::vector<ClumpDiscrepancy> clump_discrepancies(const Configuration& c, const ClumpHierarchy& h, int k)
{
    const std::vector<std::uint8_t> bits = core_bits(c, h.grid());
    const std::vector<std::size_t> labels = h.labels(k);
    const std::size_t n = labels.size();
    std::vector<std::size_t> size(n, 0);
    std::vector<std::int64_t> zeta(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++size[labels[i]];
        zeta[labels[i]] += bits[i] ? 1 : -1;
    }
    std::vector<ClumpDiscrepancy> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (size[i] > 0) {
            out.push_back({i, size[i], zeta[i]});
        }
    }
    return out;
}

Matching translate_matching(const Matching& m, const Site& z)
{
    const Grid& g = m.grid;
    if (!g.periodic()) {
        throw UnsupportedGeometry("translate_matching needs a torus");
    }
    Matching out(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const std::size_t j = g.index(g.site(i) + z);
        if (m.partner[i] >= 0) {
            out.partner[j] = static_cast<std::int64_t>(g.index(g.site(static_cast<std::size_t>(m.partner[i])) + z));
        }
        out.stage[j] = m.stage[i];
        out.censored[j] = m.censored[i];
    }
    return out;
}

nlohmann::json matching_summary(const StagedMatching& m, const ClumpHierarchy* h)
{
    nlohmann::json j;
    j["n_sites"] = m.grid().size();
    j["n_pairs"] = m.base.pair_count();
    j["stage_pairs"] = m.stage_pairs;
    j["censored"] = m.base.censored_count();
    std::size_t inexact = 0;
    for (std::size_t i = 0; i < m.exact.size(); ++i) {
        inexact += (m.base.matched(i) && !m.exact[i]) ? 1 : 0;
    }
    j["inexact_paired_sites"] = inexact;
    j["k_max"] = m.k_max;
    if (h != nullptr) {
        j["forced_merges"] = h->forced_merges();
        j["truncation"] = {{"k_max", h->truncation().k_max},
                           {"halo_margin", h->truncation().halo_margin},
                           {"residual_bound", h->truncation().residual_bound}};
    }
    return j;
}

} // namespace eqm
