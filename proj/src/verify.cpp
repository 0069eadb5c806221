#include "eqm/verify.hpp"

#include <deque>
#include <random>
#include <unordered_map>

#include "eqm/transport.hpp"

namespace eqm {

bool VerifyReport::passed() const
{
    for (const auto& c : checks) {
        if (!c.passed) {
            return false;
        }
    }
    return true;
}

nlohmann::json VerifyReport::to_json() const
{
    nlohmann::json j = nlohmann::json::array();
    for (const auto& c : checks) {
        j.push_back({{"check", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    }
    return j;
}

std::vector<std::size_t> bfs_clump_labels(const EdgeCutLevels& e, int k)
{
    const Grid& g = e.grid();
    const std::size_t n = g.size();
    constexpr std::size_t unset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> label(n, unset);
    // Incoming edges are keyed by the neighbour below, so collect them once.
    std::vector<std::vector<std::size_t>> below(n);
    for (int a = 0; a < g.dim(); ++a) {
        for (std::size_t i = 0; i < n; ++i) {
            if (const auto j = g.step(i, a); j && e.level(i, a) <= k) {
                below[*j].push_back(i);
            }
        }
    }
    std::deque<std::size_t> queue;
    for (std::size_t start = 0; start < n; ++start) {
        if (label[start] != unset) {
            continue;
        }
        label[start] = start;
        queue.push_back(start);
        while (!queue.empty()) {
            const std::size_t x = queue.front();
            queue.pop_front();
            const auto visit = [&](std::size_t y) {
                if (label[y] == unset) {
                    label[y] = start;
                    queue.push_back(y);
                }
            };
            for (int a = 0; a < g.dim(); ++a) {
                if (const auto y = g.step(x, a); y && e.level(x, a) <= k) {
                    visit(*y);
                }
            }
            for (std::size_t y : below[x]) {
                visit(y);
            }
        }
    }
    return label;
}

bool same_partition(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b)
{
    if (a.size() != b.size()) {
        return false;
    }
    std::unordered_map<std::size_t, std::size_t> ab;
    std::unordered_map<std::size_t, std::size_t> ba;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto [it, fresh] = ab.emplace(a[i], b[i]);
        if (!fresh && it->second != b[i]) {
            return false;
        }
        const auto [jt, fresh2] = ba.emplace(b[i], a[i]);
        if (!fresh2 && jt->second != a[i]) {
            return false;
        }
    }
    return true;
}

namespace {

void fail(CheckResult& r, const std::string& why)
{
    if (r.passed) {
        r.passed = false;
        r.detail = why;
    }
}

bool unmatched_after(const StagedMatching& m, std::size_t i, int k)
{
    return m.base.stage[i] == kUnmatchedStage || m.base.stage[i] > k;
}

} // namespace

VerifyReport verify_configuration(const Configuration& c, int k_max, const Grid& core, std::uint64_t shift_seed)
{
    VerifyReport report;
    const EdgeCutLevels e = compute_edge_cutlevels(c, k_max, core);
    const ClumpHierarchy h = build_clump_hierarchy(c, k_max, core);
    const StagedMatching m = build_matching(c, h);
    const std::vector<std::uint8_t> bits = core_bits(c, core);
    const std::size_t n = core.size();

    CheckResult valid{"involution_opposite_bits", true, {}};
    if (const std::string fault = check_matching(c, m.base); !fault.empty()) {
        fail(valid, fault);
    }
    report.checks.push_back(valid);

    CheckResult count{"unmatched_equals_imbalance", true, {}};
    std::size_t ones = 0;
    std::size_t unmatched_heads = 0;
    std::size_t unmatched_tails = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ones += bits[i];
        if (!m.base.matched(i)) {
            (bits[i] ? unmatched_heads : unmatched_tails) += 1;
        }
    }
    const std::size_t zeros = n - ones;
    const std::size_t imbalance = ones > zeros ? ones - zeros : zeros - ones;
    if (unmatched_heads + unmatched_tails != imbalance) {
        fail(count, std::to_string(unmatched_heads + unmatched_tails) + " unmatched, imbalance " +
                        std::to_string(imbalance));
    }
    report.checks.push_back(count);

    CheckResult maximal{"stage_maximality", true, {}};
    CheckResult bfs{"hierarchy_matches_bfs", true, {}};
    CheckResult zeta{"zeta_counts_bad_sites", true, {}};
    for (int k = 1; k <= k_max; ++k) {
        const std::vector<std::size_t> labels = h.labels(k);
        if (!same_partition(labels, bfs_clump_labels(e, k))) {
            fail(bfs, "partitions differ at level " + std::to_string(k));
        }
        std::vector<std::uint8_t> has(n, 0); // bit 1: unmatched head, bit 2: unmatched tail
        std::size_t bad = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (unmatched_after(m, i, k)) {
                has[labels[i]] |= bits[i] ? 1 : 2;
            }
            bad += k_bad(m, i, k) ? 1 : 0;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (has[i] == 3) {
                fail(maximal, "level-" + std::to_string(k) + " clump of " + to_string(core.site(i)) +
                                  " keeps an unmatched head and tail");
                break;
            }
        }
        std::int64_t total = 0;
        for (const auto& d : clump_discrepancies(c, h, k)) {
            total += d.zeta < 0 ? -d.zeta : d.zeta;
        }
        if (static_cast<std::size_t>(total) != bad) {
            fail(zeta, "level " + std::to_string(k) + ": sum |zeta| = " + std::to_string(total) + ", k-bad = " +
                           std::to_string(bad));
        }
    }
    report.checks.push_back(maximal);
    report.checks.push_back(bfs);
    report.checks.push_back(zeta);

    if (!core.periodic()) {
        return report;
    }

    CheckResult equi{"translation_equivariance", true, {}};
    std::mt19937_64 rng(shift_seed);
    Site z(core.dim());
    for (int a = 0; a < core.dim(); ++a) {
        z[a] = static_cast<Coord>(rng() % static_cast<std::uint64_t>(core.sides()[a]));
    }
    const Configuration shifted = translate_configuration(c, z);
    const StagedMatching ms = build_matching(shifted, build_clump_hierarchy(shifted, k_max, core));
    const Matching moved = translate_matching(m.base, z);
    if (moved.partner != ms.base.partner || moved.stage != ms.base.stage) {
        fail(equi, "shift by " + to_string(z) + " does not commute with the matching");
    }
    report.checks.push_back(equi);

    CheckResult identity{"kbad_identity", true, {}};
    for (int k = 1; k <= k_max; ++k) {
        const RationalPair p = verify_kbad_identity(c, h, m, k);
        if (p.lhs != p.rhs) {
            fail(identity, "level " + std::to_string(k) + ": " + p.lhs.str() + " != " + p.rhs.str());
        }
    }
    report.checks.push_back(identity);

    CheckResult transport{"matching_mass_transport", true, {}};
    const TransportTotals t = verify_mass_transport(c, matching_transport(c, m.base));
    const Rational expect_out(static_cast<long long>(n - unmatched_tails));
    const Rational expect_in(static_cast<long long>(2 * ones - unmatched_heads));
    if (t.out_mass != expect_out || t.in_mass != expect_in || t.out_mass != t.in_mass) {
        fail(transport, "out " + t.out_mass.str() + ", in " + t.in_mass.str());
    }
    report.checks.push_back(transport);
    return report;
}

} // namespace eqm
