// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance            run everything
//   acceptance --only 4   run one criterion
//
// Exit status is 0 only when every selected criterion passes.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <queue>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "eqm/stats.hpp"
#include "eqm/transport.hpp"

using namespace eqm;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Involution pairing opposite bits; returns the number of unmatched sites or
// -1 on a violation.
long long unmatched_or_fault(const Configuration& c, const Matching& m)
{
    if (m.partner.size() != c.size()) {
        return -1;
    }
    long long unmatched = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const std::int64_t j = m.partner[i];
        if (j < 0) {
            ++unmatched;
            continue;
        }
        const auto u = static_cast<std::size_t>(j);
        if (u >= c.size() || u == i || m.partner[u] != static_cast<std::int64_t>(i) || c.bit(i) == c.bit(u)) {
            return -1;
        }
    }
    return unmatched;
}

StagedMatching clump_rule(const Configuration& c, int k_max)
{
    return build_matching(c, build_clump_hierarchy(c, k_max, c.grid()));
}

Matching meshalkin_rule(const Configuration& c)
{
    return meshalkin_lift(c, c.dim());
}

// Sum over lines along the last axis of |heads - tails| on that line.
long long line_imbalance(const Configuration& c)
{
    const Grid& g = c.grid();
    const int last = c.dim() - 1;
    std::map<std::vector<Coord>, long long> lines;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const Site x = g.site(i);
        std::vector<Coord> key;
        for (int a = 0; a < last; ++a) {
            key.push_back(x[a]);
        }
        lines[key] += c.bit(i) ? 1 : -1;
    }
    long long total = 0;
    for (const auto& [key, z] : lines) {
        total += std::llabs(z);
    }
    return total;
}

Outcome validity()
{
    std::mt19937_64 rng(2024);
    int faults = 0;
    int imbalance_misses = 0;
    for (int t = 0; t < 1000; ++t) {
        const int d = 1 + static_cast<int>(rng() % 2);
        const Coord side = 2 + static_cast<Coord>(rng() % 63);
        const Configuration c = generate_configuration(d, Grid::torus(Site::filled(d, side)), rng(), 0.5);
        const long long ones = static_cast<long long>(c.ones());
        const long long imbalance = std::llabs(2 * ones - static_cast<long long>(c.size()));

        const StagedMatching a = clump_rule(c, max_torus_kmax(d, side));
        const long long ua = unmatched_or_fault(c, a.base);
        faults += ua < 0 ? 1 : 0;
        imbalance_misses += ua != imbalance ? 1 : 0;

        // Lines are matched independently: each cycle keeps its own excess.
        const Matching b = meshalkin_rule(c);
        const long long ub = unmatched_or_fault(c, b);
        faults += ub < 0 ? 1 : 0;
        imbalance_misses += ub != line_imbalance(c) ? 1 : 0;
    }
    return {faults == 0 && imbalance_misses == 0,
            fmt("1000 tori x 2 rules, %d invalid, %d unmatched-count mismatches", faults, imbalance_misses)};
}

Outcome equivariance()
{
    const Grid g = Grid::torus(Site{32, 32});
    const int k_max = max_torus_kmax(2, 32);
    std::mt19937_64 rng(77);
    int clump_bad = 0;
    int line_bad = 0;
    for (int t = 0; t < 100; ++t) {
        const Configuration c = generate_configuration(2, g, rng(), 0.5);
        const Site z{static_cast<Coord>(rng() % 32), static_cast<Coord>(rng() % 32)};
        const Configuration cz = translate_configuration(c, z);

        const Matching a = translate_matching(clump_rule(c, k_max).base, z);
        const Matching b = clump_rule(cz, k_max).base;
        clump_bad += (a.partner != b.partner || a.stage != b.stage || a.censored != b.censored) ? 1 : 0;

        const Matching ma = translate_matching(meshalkin_rule(c), z);
        const Matching mb = meshalkin_rule(cz);
        line_bad += (ma.partner != mb.partner || ma.stage != mb.stage || ma.censored != mb.censored) ? 1 : 0;
    }
    return {clump_bad == 0 && line_bad == 0,
            fmt("100 shifts, clump rule %d mismatches, Meshalkin %d mismatches", clump_bad, line_bad)};
}

Outcome meshalkin_oracle()
{
    std::uint64_t strings = 0;
    std::uint64_t bad = 0;
    for (int n = 0; n <= 14; ++n) {
        std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
        for (std::uint32_t mask = 0; mask < (1U << n); ++mask) {
            for (int i = 0; i < n; ++i) {
                bits[static_cast<std::size_t>(i)] = (mask >> i) & 1U;
            }
            for (const Topology t : {Topology::Line, Topology::Cycle}) {
                ++strings;
                bad += meshalkin_match_line(bits, t) != naive_bracket_oracle(bits, t) ? 1 : 0;
            }
        }
    }
    return {bad == 0, fmt("%llu (string, topology) cases, %llu disagreements", static_cast<unsigned long long>(strings),
                          static_cast<unsigned long long>(bad))};
}

Outcome meshalkin_tail()
{
    TailSpec spec;
    spec.rule = Rule::Meshalkin;
    spec.dim = 1;
    spec.side = 1 << 20;
    spec.geometry = GeometryKind::Torus;
    spec.trials = 10;
    spec.seed = 4;
    spec.radii = parse_radii("4..512:25");
    const SurvivalCurve c = estimate_tail(spec);
    const FitResult f = fit_exponent(c, 4, 512);
    const bool ok = c.sites >= 10'000'000 && std::abs(f.slope + 0.5) <= 0.05;
    return {ok, fmt("%llu sites, slope %.4f +/- %.4f over [4, 512], target -0.50 +/- 0.05",
                    static_cast<unsigned long long>(c.sites), f.slope, f.stderr_slope)};
}

Outcome seed_density_check()
{
    const Configuration c = generate_configuration(2, Grid::torus(Site{1024, 1024}), 31, 0.5);
    const Grid& g = c.grid();
    const double n = static_cast<double>(c.size());
    double worst = 0.0;
    bool agree = true;
    for (int k = 1; k <= 8; ++k) {
        // Direct scan, wrapping along e_1.
        std::uint64_t count = 0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            Site x = g.site(i);
            bool seed = c.bit(i);
            for (int j = 1; j < k && seed; ++j) {
                ++x[0];
                seed = !c.bit(g.index(g.wrap(x)));
            }
            count += seed ? 1 : 0;
        }
        const double density = static_cast<double>(count) / n;
        agree = agree && density == seed_density(c, k);
        const double p = std::ldexp(1.0, -k);
        worst = std::max(worst, std::abs(density - p) / std::sqrt(p * (1.0 - p) / n));
    }
    return {agree && worst <= 4.0, fmt("k = 1..8, worst deviation %.2f sigma, scan %s library", worst,
                                       agree ? "matches" : "DIFFERS FROM")};
}

Outcome transport_identities()
{
    const Grid g = Grid::torus(Site{64, 64});
    const int k_max = max_torus_kmax(2, 64);
    int kbad_bad = 0;
    int checks = 0;
    for (std::uint64_t t = 0; t < 100; ++t) {
        const Configuration c = generate_configuration(2, g, derive_seed(606, t), 0.5);
        const ClumpHierarchy h = build_clump_hierarchy(c, k_max, g);
        const StagedMatching m = build_matching(c, h);
        for (int k = 1; k <= k_max; ++k) {
            const RationalPair p = verify_kbad_identity(c, h, m, k);
            ++checks;
            kbad_bad += p.lhs == p.rhs ? 0 : 1;
        }
    }
    int transport_bad = 0;
    for (std::uint64_t t = 0; t < 100; ++t) {
        const Configuration c = balanced_torus(2, 64, derive_seed(607, t));
        const StagedMatching m = clump_rule(c, k_max);
        const TransportTotals tt = verify_mass_transport(c, matching_transport(c, m.base));
        const auto n = static_cast<long long>(c.size());
        const Rational ones_density(static_cast<long long>(c.ones()), n);
        transport_bad += (tt.out_mass / n == 1 && tt.in_mass / n == 2 * ones_density) ? 0 : 1;
    }
    return {kbad_bad == 0 && transport_bad == 0,
            fmt("k-bad identity %d/%d exact, matching transport %d/100 exact on balanced tori", checks - kbad_bad,
                checks, 100 - transport_bad)};
}

Outcome event_bounds()
{
    const std::uint64_t trials = 10'000;
    std::ostringstream worst;
    bool ok = true;
    double worst_margin = -1e9;
    const auto judge = [&](const ProportionEstimate& e, const std::string& what) {
        const double p = static_cast<double>(e.hits) / static_cast<double>(e.trials);
        const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(e.trials));
        const double margin = p - (e.bound + 3.0 * se);
        if (margin > 0.0) {
            ok = false;
        }
        if (margin > worst_margin) {
            worst_margin = margin;
            worst.str("");
            worst << what << " p=" << p << " bound=" << e.bound;
        }
    };
    for (int k = 4; k <= 7; ++k) {
        judge(estimate_enclosure_failure(2, k, trials, 700 + k), "E_" + std::to_string(k) + "^c");
    }
    for (int k = 2; k <= 6; ++k) {
        for (double s : {4.0, 16.0}) {
            judge(estimate_cutter_hits(2, k, s, trials, 710 + k * 20 + static_cast<int>(s)),
                  "U_" + std::to_string(k) + "(" + std::to_string(static_cast<int>(s)) + ")");
        }
    }
    return {ok, "14 events x 1e4 trials, tightest: " + worst.str()};
}

Outcome d2_domination()
{
    const Coord side = 1024;
    const KmaxChoice kc = choose_kmax(2, side);
    TailSpec spec;
    spec.rule = Rule::Clump;
    spec.dim = 2;
    spec.side = side;
    spec.geometry = GeometryKind::Window;
    spec.k_max = kc.k_max;
    spec.trials = 12;
    spec.seed = 808;
    spec.radii = parse_radii("8..128:17");
    const SurvivalCurve c = estimate_tail(spec);
    const FitResult f = fit_exponent(c, 8, 128);
    const DominationResult dom = check_domination(c, 2, 8, 8, 128);
    const bool slope_ok = f.slope <= -0.5 && f.slope >= -1.1;
    const bool ok = kc.meets_target && dom.dominated && slope_ok;
    return {ok, fmt("1024^2 windows, K_max %d, truncation residual %.3g (need < 1e-3), slope %.3f "
                    "(need in [-1.1, -0.5]), worst ratio to C (ln r)^4 r^-2/3 %.3f",
                    kc.k_max, kc.residual, f.slope, dom.worst_ratio)};
}

// Cut levels from a direct scan for seeds and an l-infinity inside test,
// then breadth-first search per level.
std::vector<std::vector<int>> oracle_labels(const Configuration& c, const Grid& core, int k_max)
{
    const int d = 2;
    const Site lo = core.lower();
    const Site hi = lo + core.sides() - Site::filled(d, 1);
    const auto idx = [&](Coord x, Coord y) { return core.index(Site{x, y}); };
    const std::size_t n = core.size();
    std::vector<int> right(n, 0); // edge (x, y) - (x + 1, y)
    std::vector<int> up(n, 0);    // edge (x, y) - (x, y + 1)
    for (int k = 2; k <= k_max; ++k) {
        const double r = std::sqrt(std::ldexp(1.0, k) * k * k) + 0.5;
        const auto shift = static_cast<Coord>(std::floor(100.0 * r));
        const auto reach = static_cast<Coord>(std::floor(r)) + 1;
        for (Coord cx = lo[0] - reach; cx <= hi[0] + reach; ++cx) {
            for (Coord cy = lo[1] - reach; cy <= hi[1] + reach; ++cy) {
                const Coord px = cx - shift;
                bool seed = c.bit(Site{px, cy});
                for (int j = 1; j < k && seed; ++j) {
                    seed = !c.bit(Site{px + j, cy});
                }
                if (!seed) {
                    continue;
                }
                const auto inside = [&](Coord x, Coord y) {
                    return static_cast<double>(std::max(std::llabs(x - cx), std::llabs(y - cy))) < r;
                };
                for (Coord x = std::max(lo[0], cx - reach); x <= std::min(hi[0], cx + reach); ++x) {
                    for (Coord y = std::max(lo[1], cy - reach); y <= std::min(hi[1], cy + reach); ++y) {
                        const bool in = inside(x, y);
                        if (x < hi[0] && in != inside(x + 1, y)) {
                            right[idx(x, y)] = std::max(right[idx(x, y)], k);
                        }
                        if (y < hi[1] && in != inside(x, y + 1)) {
                            up[idx(x, y)] = std::max(up[idx(x, y)], k);
                        }
                    }
                }
            }
        }
    }
    std::vector<std::vector<int>> out;
    for (int k = 1; k <= k_max; ++k) {
        std::vector<int> label(n, -1);
        int next = 0;
        for (std::size_t s = 0; s < n; ++s) {
            if (label[s] >= 0) {
                continue;
            }
            std::queue<Site> q;
            q.push(core.site(s));
            label[s] = next;
            while (!q.empty()) {
                const Site u = q.front();
                q.pop();
                const auto visit = [&](Coord x, Coord y, int edge_level) {
                    const std::size_t v = idx(x, y);
                    if (edge_level <= k && label[v] < 0) {
                        label[v] = next;
                        q.push(Site{x, y});
                    }
                };
                const Coord x = u[0];
                const Coord y = u[1];
                if (x < hi[0]) {
                    visit(x + 1, y, right[idx(x, y)]);
                }
                if (x > lo[0]) {
                    visit(x - 1, y, right[idx(x - 1, y)]);
                }
                if (y < hi[1]) {
                    visit(x, y + 1, up[idx(x, y)]);
                }
                if (y > lo[1]) {
                    visit(x, y - 1, up[idx(x, y - 1)]);
                }
            }
            ++next;
        }
        out.push_back(std::move(label));
    }
    return out;
}

template <class A, class B>
bool same_blocks(const std::vector<A>& a, const std::vector<B>& b)
{
    if (a.size() != b.size()) {
        return false;
    }
    std::map<A, B> ab;
    std::map<B, A> ba;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto [i1, new1] = ab.emplace(a[i], b[i]);
        const auto [i2, new2] = ba.emplace(b[i], a[i]);
        if (i1->second != b[i] || i2->second != a[i]) {
            return false;
        }
    }
    return true;
}

Outcome hierarchy_oracle()
{
    const int k_max = 6;
    const Grid core = Grid::window(Site{0, 0}, Site{64, 64});
    int bad = 0;
    std::size_t clumps_l1 = 0;
    for (std::uint64_t t = 0; t < 50; ++t) {
        const Configuration c = generate_configuration(2, required_region(core, k_max), derive_seed(909, t), 0.5);
        const ClumpHierarchy h = build_clump_hierarchy(c, k_max, core);
        const auto oracle = oracle_labels(c, core, k_max);
        clumps_l1 += h.clump_count(k_max - 1);
        for (int k = 1; k <= k_max; ++k) {
            bad += same_blocks(h.labels(k), oracle[static_cast<std::size_t>(k - 1)]) ? 0 : 1;
        }
    }
    return {bad == 0, fmt("50 windows x 6 levels, %d partition mismatches (mean %.1f clumps at level 5)", bad,
                          static_cast<double>(clumps_l1) / 50.0)};
}

Outcome biased_coins()
{
    const double f = biased_unmatched_fraction(0.6, 2, 256, 100, 1010);
    return {std::abs(f - 0.2) <= 0.010, fmt("mean unmatched fraction %.5f, target 0.200 +/- 0.010", f)};
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(EQM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

Outcome cli_determinism()
{
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("eqm_accept_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const std::vector<std::pair<std::string, std::vector<std::string>>> commands{
        {"gen --side 48 --kmax 4 --seed 11", {".eqmz", ".eqmz.json"}},
        {"match --side 48 --kmax 4 --seed 11 --format csv,json,seeds,cutlevels",
         {".csv", ".json", ".seeds.csv", ".cutlevels.csv"}},
        {"match --rule meshalkin --geometry torus --side 64 --seed 3 --format csv,json", {".csv", ".json"}},
        {"tail --side 128 --kmax 5 --trials 4 --radii 2..32:8 --format csv,json,svg", {".csv", ".json", ".svg"}},
        {"tail --rule meshalkin --dim 1 --geometry torus --side 65536 --trials 4 --radii 4..512:8", {".csv", ".json"}},
        {"verify --side 32 --geometry torus --trials 3", {".json"}},
        {"verify --side 32 --kmax 3 --trials 2", {".json"}},
        {"events --dim 2 --k 2..4 --s 4,16 --trials 200", {".csv"}},
    };
    int files = 0;
    int differing = 0;
    int failed_runs = 0;
    for (std::size_t i = 0; i < commands.size(); ++i) {
        const auto& [args, exts] = commands[i];
        const std::string a = (dir / ("a" + std::to_string(i))).string();
        const std::string b = (dir / ("b" + std::to_string(i))).string();
        if (run_cli(args + " --out " + a) != 0 || run_cli(args + " --out " + b) != 0) {
            ++failed_runs;
            continue;
        }
        for (const auto& ext : exts) {
            ++files;
            const std::string x = slurp(a + ext);
            differing += (x.empty() || x != slurp(b + ext)) ? 1 : 0;
        }
    }
    fs::remove_all(dir);
    return {failed_runs == 0 && differing == 0,
            fmt("%zu commands run twice, %d failed, %d/%d payloads differ or empty", commands.size(), failed_runs,
                differing, files)};
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance run"};
    int only = 0;
    app.add_option("--only", only, "run a single criterion (1-11)")->check(CLI::Range(1, 11));
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> all{
        {1, "matching validity", 60, validity},
        {2, "translation equivariance", 60, equivariance},
        {3, "Meshalkin stack vs reduction oracle", 120, meshalkin_oracle},
        {4, "Meshalkin tail exponent, d=1", 300, meshalkin_tail},
        {5, "seed density", 60, seed_density_check},
        {6, "mass-transport identities", 120, transport_identities},
        {7, "event bounds, d=2", 600, event_bounds},
        {8, "d=2 tail domination", 1800, d2_domination},
        {9, "hierarchy vs breadth-first search", 120, hierarchy_oracle},
        {10, "biased-coin unmatched fraction", 120, biased_coins},
        {11, "CLI determinism", 60, cli_determinism},
    };

    int failures = 0;
    for (const auto& c : all) {
        if (only != 0 && c.id != only) {
            continue;
        }
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = o.pass && in_time;
        failures += pass ? 0 : 1;
        std::cout << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail
                  << fmt(" (%.1f s of %.0f s%s)", secs, c.budget_s, in_time ? "" : ", over budget") << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
