#include "eqm/transport.hpp"

#include <memory>

#include "eqm/errors.hpp"
#include "eqm/parallel.hpp"

namespace eqm {

TransportTotals verify_mass_transport(const Configuration& c, const Transport& t)
{
    const Grid& g = c.grid();
    if (!g.periodic()) {
        throw UnsupportedGeometry("mass transport bookkeeping needs a torus");
    }
    TransportTotals out;
    out.sites = g.size();
    out.received.assign(g.size(), Rational(0));
    for (std::size_t x = 0; x < g.size(); ++x) {
        for (std::size_t y : t.support(x)) {
            if (y >= g.size()) {
                throw ContractViolation("transport target outside the torus");
            }
            const Rational m = t.mass(x, y);
            if (m < 0) {
                throw ContractViolation("negative mass from " + to_string(g.site(x)) + " to " + to_string(g.site(y)));
            }
            out.out_mass += m;
            out.received[y] += m;
        }
    }
    for (const auto& r : out.received) {
        out.in_mass += r;
    }
    return out;
}

Transport matching_transport(const Configuration& c, const Matching& m)
{
    Transport t;
    t.support = [&c, &m](std::size_t x) -> std::vector<std::size_t> {
        if (c.bit(x)) {
            return {x};
        }
        if (m.partner[x] >= 0) {
            return {static_cast<std::size_t>(m.partner[x])};
        }
        return {};
    };
    t.mass = [&c, &m](std::size_t x, std::size_t y) -> Rational {
        if (c.bit(x)) {
            return Rational(x == y ? 1 : 0);
        }
        return Rational(m.partner[x] == static_cast<std::int64_t>(y) && c.bit(y) ? 1 : 0);
    };
    return t;
}

Transport kbad_transport(const StagedMatching& m, const ClumpHierarchy& h, int k)
{
    auto labels = std::make_shared<std::vector<std::size_t>>(h.labels(k));
    auto members = std::make_shared<std::vector<std::vector<std::size_t>>>(labels->size());
    for (std::size_t i = 0; i < labels->size(); ++i) {
        (*members)[(*labels)[i]].push_back(i);
    }
    Transport t;
    t.support = [&m, k, labels, members](std::size_t x) -> std::vector<std::size_t> {
        if (!k_bad(m, x, k)) {
            return {};
        }
        return (*members)[(*labels)[x]];
    };
    t.mass = [&m, k, labels, members](std::size_t x, std::size_t y) -> Rational {
        if (!k_bad(m, x, k) || (*labels)[x] != (*labels)[y]) {
            return Rational(0);
        }
        return Rational(1, static_cast<long long>((*members)[(*labels)[x]].size()));
    };
    return t;
}

RationalPair verify_kbad_identity(const Configuration& c, const ClumpHierarchy& h, const StagedMatching& m, int k)
{
    const Grid& g = h.grid();
    if (!g.periodic()) {
        throw UnsupportedGeometry("the k-bad identity needs a torus");
    }
    if (!(m.grid() == g)) {
        throw ArgumentError("matching and hierarchy cover different grids");
    }
    const auto n = static_cast<long long>(g.size());

    long long bad = 0;
    for (std::size_t x = 0; x < g.size(); ++x) {
        bad += k_bad(m, x, k) ? 1 : 0;
    }

    std::vector<std::size_t> size(g.size(), 0);
    std::vector<long long> abs_zeta(g.size(), 0);
    for (const auto& d : clump_discrepancies(c, h, k)) {
        size[d.clump] = d.size;
        abs_zeta[d.clump] = d.zeta < 0 ? -d.zeta : d.zeta;
    }
    Rational sum(0);
    for (std::size_t x = 0; x < g.size(); ++x) {
        const std::size_t rep = h.clump_id(x, k);
        sum += Rational(abs_zeta[rep], static_cast<long long>(size[rep]));
    }
    return {Rational(bad, n), sum / n};
}

Configuration balanced_torus(int d, Coord side, std::uint64_t seed, std::uint64_t* attempts)
{
    const Grid g = Grid::torus(Site::filled(d, side));
    if (g.size() % 2 != 0) {
        throw ArgumentError("a balanced torus needs an even number of sites");
    }
    for (std::uint64_t t = 0;; ++t) {
        Configuration c = generate_configuration(d, g, derive_seed(seed, t), 0.5);
        if (2 * c.ones() == g.size()) {
            if (attempts != nullptr) {
                *attempts = t + 1;
            }
            return c;
        }
    }
}

double biased_unmatched_fraction(double p, int d, Coord side, std::uint64_t trials, std::uint64_t seed)
{
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ArgumentError("p must lie in [0, 1]");
    }
    if (trials == 0) {
        throw ArgumentError("trials must be >= 1");
    }
    const Grid g = Grid::torus(Site::filled(d, side));
    const int k_max = max_torus_kmax(d, side);
    std::vector<double> fraction(trials, 0.0);
    parallel_for(trials, [&](std::size_t t) {
        const Configuration c = generate_configuration(d, g, derive_seed(seed, t), p);
        const ClumpHierarchy h = build_clump_hierarchy(c, k_max, g);
        const StagedMatching m = build_matching(c, h);
        fraction[t] = static_cast<double>(g.size() - 2 * m.base.pair_count()) / static_cast<double>(g.size());
    });
    double total = 0.0;
    for (double f : fraction) {
        total += f;
    }
    return total / static_cast<double>(trials);
}

} // namespace eqm
