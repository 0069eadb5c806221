#include "eqm/meshalkin.hpp"

#include <cctype>
#include <ostream>

#include "eqm/errors.hpp"

namespace eqm {

LinePartners meshalkin_match_line(std::span<const std::uint8_t> bits, Topology topology)
{
    const std::size_t n = bits.size();
    LinePartners partner(n, -1);
    if (n == 0) {
        return partner;
    }

    std::size_t start = 0;
    if (topology == Topology::Cycle) {
        // Cut right after the first minimum of the walk (zero +1, one -1),
        // counting the empty prefix as a candidate.
        std::int64_t walk = 0;
        std::int64_t lowest = 0;
        for (std::size_t i = 0; i < n; ++i) {
            walk += bits[i] ? -1 : 1;
            if (walk < lowest) {
                lowest = walk;
                start = i + 1;
            }
        }
        start %= n;
    }

    std::vector<std::size_t> open;
    open.reserve(n / 2 + 1);
    for (std::size_t step = 0; step < n; ++step) {
        const std::size_t i = (start + step) % n;
        if (bits[i] == 0) {
            open.push_back(i);
        } else if (!open.empty()) {
            const std::size_t j = open.back();
            open.pop_back();
            partner[i] = static_cast<std::int64_t>(j);
            partner[j] = static_cast<std::int64_t>(i);
        }
    }
    return partner;
}

LinePartners naive_bracket_oracle(std::span<const std::uint8_t> bits, Topology topology)
{
    const std::size_t n = bits.size();
    LinePartners partner(n, -1);
    std::vector<std::size_t> alive(n);
    for (std::size_t i = 0; i < n; ++i) {
        alive[i] = i;
    }
    for (;;) {
        const std::size_t m = alive.size();
        std::vector<std::uint8_t> gone(m, 0);
        bool progress = false;
        for (std::size_t p = 0; p < m; ++p) {
            std::size_t q = p + 1;
            if (q == m) {
                if (topology == Topology::Line || m < 2) {
                    break;
                }
                q = 0;
            }
            if (bits[alive[p]] == 0 && bits[alive[q]] == 1) {
                partner[alive[p]] = static_cast<std::int64_t>(alive[q]);
                partner[alive[q]] = static_cast<std::int64_t>(alive[p]);
                gone[p] = gone[q] = 1;
                progress = true;
            }
        }
        if (!progress) {
            break;
        }
        std::vector<std::size_t> next;
        for (std::size_t p = 0; p < m; ++p) {
            if (!gone[p]) {
                next.push_back(alive[p]);
            }
        }
        alive.swap(next);
    }
    return partner;
}

std::vector<std::uint8_t> parse_bits(const std::string& text)
{
    std::vector<std::uint8_t> bits;
    for (char ch : text) {
        if (ch == '0' || ch == '1') {
            bits.push_back(static_cast<std::uint8_t>(ch - '0'));
        } else if (!std::isspace(static_cast<unsigned char>(ch))) {
            throw ArgumentError(std::string("unexpected character in bit string: ") + ch);
        }
    }
    return bits;
}

// ---------------------------------------------------------------------------

Matching::Matching(Grid g)
    : grid(std::move(g)), partner(grid.size(), -1), stage(grid.size(), kUnmatchedStage), censored(grid.size(), 0)
{
}

void Matching::pair(std::size_t a, std::size_t b, std::int32_t at_stage)
{
    if (a == b || matched(a) || matched(b)) {
        throw ConsistencyError("pair() on an already matched or identical site");
    }
    partner[a] = static_cast<std::int64_t>(b);
    partner[b] = static_cast<std::int64_t>(a);
    stage[a] = stage[b] = at_stage;
}

std::size_t Matching::pair_count() const
{
    std::size_t n = 0;
    for (auto p : partner) {
        n += p >= 0 ? 1 : 0;
    }
    return n / 2;
}

std::size_t Matching::censored_count() const
{
    std::size_t n = 0;
    for (auto c : censored) {
        n += c;
    }
    return n;
}

void Matching::close()
{
    for (std::size_t i = 0; i < partner.size(); ++i) {
        censored[i] = partner[i] < 0 ? 1 : 0;
    }
}

Matching meshalkin_lift(const Configuration& c, int axis)
{
    const Grid& g = c.grid();
    if (axis < 1 || axis > g.dim()) {
        throw ArgumentError("axis must be in [1, d]");
    }
    const int a = axis - 1;
    const auto len = static_cast<std::size_t>(g.sides()[a]);
    const std::size_t stride = g.stride(a);
    const Topology topo = g.periodic() ? Topology::Cycle : Topology::Line;

    Matching m(g);
    std::vector<std::uint8_t> line(len);
    for (std::size_t base = 0; base < g.size(); ++base) {
        if ((base / stride) % len != 0) {
            continue;
        }
        for (std::size_t t = 0; t < len; ++t) {
            line[t] = c.bit(base + t * stride) ? 1 : 0;
        }
        const LinePartners lp = meshalkin_match_line(line, topo);
        for (std::size_t t = 0; t < len; ++t) {
            if (lp[t] > static_cast<std::int64_t>(t)) {
                m.pair(base + t * stride, base + static_cast<std::size_t>(lp[t]) * stride, 0);
            }
        }
    }
    m.close();
    return m;
}

std::string check_matching(const Configuration& c, const Matching& m)
{
    const Grid& g = m.grid;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const std::int64_t p = m.partner[i];
        if (p < 0) {
            continue;
        }
        if (m.censored[i]) {
            return "site " + to_string(g.site(i)) + " is both matched and censored";
        }
        const auto j = static_cast<std::size_t>(p);
        if (j >= g.size() || m.partner[j] != static_cast<std::int64_t>(i)) {
            return "partner map is not an involution at " + to_string(g.site(i));
        }
        if (c.bit(g.site(i)) == c.bit(g.site(j))) {
            return "pair " + to_string(g.site(i)) + "-" + to_string(g.site(j)) + " has equal bits";
        }
    }
    return {};
}

void write_matching_csv(std::ostream& out, const Matching& m, std::span<const std::int32_t> bad_level)
{
    const Grid& g = m.grid;
    const int d = g.dim();
    for (int a = 1; a <= d; ++a) {
        out << "site_" << a << ',';
    }
    for (int a = 1; a <= d; ++a) {
        out << "partner_" << a << ',';
    }
    out << "stage,censored";
    if (!bad_level.empty()) {
        out << ",bad_level";
    }
    out << '\n';
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Site x = g.site(i);
        for (int a = 0; a < d; ++a) {
            out << x[a] << ',';
        }
        if (m.partner[i] >= 0) {
            const Site y = g.site(static_cast<std::size_t>(m.partner[i]));
            for (int a = 0; a < d; ++a) {
                out << y[a] << ',';
            }
        } else {
            for (int a = 0; a < d; ++a) {
                out << ',';
            }
        }
        out << m.stage[i] << ',' << int{m.censored[i]};
        if (!bad_level.empty()) {
            out << ',';
            if (bad_level[i] < 0) {
                out << "inf";
            } else {
                out << bad_level[i];
            }
        }
        out << '\n';
    }
}

} // namespace eqm
