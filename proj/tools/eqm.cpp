// eqm: generate coin-flip configurations, build matchings, estimate tails and
// run the property checks.
//
// Exit codes: 0 ok, 1 verification failure, 2 invalid arguments,
// 3 undecidable with the given margin.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "eqm/config_io.hpp"
#include "eqm/errors.hpp"
#include "eqm/report.hpp"
#include "eqm/stats.hpp"
#include "eqm/transport.hpp"
#include "eqm/verify.hpp"

namespace {

using namespace eqm;

struct Options {
    int dim = 2;
    Coord side = 64;
    std::optional<Coord> margin;
    std::optional<int> kmax;
    std::uint64_t seed = 1;
    double bias = 0.5;
    std::uint64_t trials = 1;
    std::string rule = "clump";
    std::string geometry = "window";
    int axis = 0; // 0 = last axis
    std::string radii = "4..128";
    std::string fit_range;
    std::string out;
    std::vector<std::string> format;
    std::string input;
    std::string levels = "4";
    std::string scales = "4,16";
    std::string policy = "exclude";
    bool exact_only = false;
};

constexpr int kExitVerify = 1;
constexpr int kExitArgs = 2;
constexpr int kExitUndecidable = 3;

GeometryKind geometry_of(const Options& o)
{
    return o.geometry == "torus" ? GeometryKind::Torus : GeometryKind::Window;
}

Grid core_of(const Options& o)
{
    const Site sides = Site::filled(o.dim, o.side);
    return geometry_of(o) == GeometryKind::Torus ? Grid::torus(sides) : Grid::window(Site(o.dim), sides);
}

int axis_of(const Options& o)
{
    return o.axis == 0 ? o.dim : o.axis;
}

// K_max from --kmax or --margin, else the automatic choice.
struct KmaxResolution {
    int k_max = 1;
    double residual = 0.0;
    std::string source;
};

KmaxResolution resolve_kmax(const Options& o)
{
    KmaxResolution r;
    if (geometry_of(o) == GeometryKind::Torus) {
        const int cap = max_torus_kmax(o.dim, o.side);
        if (o.margin) {
            throw ArgumentError("--margin applies to windows; use --kmax on a torus");
        }
        r.k_max = o.kmax.value_or(cap);
        if (r.k_max < 1 || r.k_max > cap) {
            throw ArgumentError("--kmax must be in [1, " + std::to_string(cap) + "] for this torus (r_k <= side/2)");
        }
        r.source = o.kmax ? "kmax" : "torus limit";
        r.residual = truncation_bias(o.dim, r.k_max, static_cast<double>(o.side) / 2.0);
        return r;
    }
    if (o.kmax) {
        if (*o.kmax < 1 || *o.kmax > 64) {
            throw ArgumentError("--kmax must be in [1, 64]");
        }
        r.k_max = *o.kmax;
        r.source = "kmax";
    } else if (o.margin) {
        r.k_max = kmax_for_margin(*o.margin, o.dim);
        r.source = "margin";
    } else {
        const KmaxChoice c = choose_kmax(o.dim, o.side);
        r.k_max = c.k_max;
        r.source = c.meets_target ? "auto" : "auto (site budget; residual target not met)";
    }
    r.residual = truncation_bias(o.dim, r.k_max, static_cast<double>(o.side) / 2.0);
    return r;
}

void validate(const Options& o)
{
    if (o.dim < 1 || o.dim > kMaxDim) {
        throw ArgumentError("--dim must be in [1, " + std::to_string(kMaxDim) + "]");
    }
    if (o.side < 1) {
        throw ArgumentError("--side must be >= 1");
    }
    if (!(o.bias >= 0.0 && o.bias <= 1.0)) {
        throw ArgumentError("--bias must lie in [0, 1]");
    }
    if (o.trials < 1) {
        throw ArgumentError("--trials must be >= 1");
    }
    if (o.axis < 0 || o.axis > o.dim) {
        throw ArgumentError("--axis must be in [1, dim]");
    }
}

nlohmann::json spec_json(const std::string& command, const Options& o)
{
    nlohmann::json j;
    j["command"] = command;
    j["version"] = kVersion;
    j["dim"] = o.dim;
    j["side"] = o.side;
    j["geometry"] = o.geometry;
    j["seed"] = o.seed;
    j["bias"] = o.bias;
    if (command == "tail" || command == "verify" || command == "events") {
        j["trials"] = o.trials;
    }
    if (command != "events") {
        j["rule"] = o.rule;
    }
    if (o.rule == "meshalkin") {
        j["axis"] = axis_of(o);
    }
    if (command == "tail") {
        j["radii"] = o.radii;
        j["policy"] = o.policy;
        j["exact_only"] = o.exact_only;
    }
    if (command == "events") {
        j["k"] = o.levels;
        j["s"] = o.scales;
    }
    if (!o.input.empty()) {
        j["input"] = o.input;
    }
    return j;
}

std::string out_path(const Options& o, const std::string& fallback, const std::string& ext)
{
    return (o.out.empty() ? fallback : o.out) + ext;
}

void write_json(const std::string& path, const nlohmann::json& j)
{
    std::ofstream f(path);
    if (!f) {
        throw FormatError("cannot write " + path);
    }
    f << j.dump(2) << '\n';
}

// --------------------------------------------------------------------------

int cmd_gen(const Options& o)
{
    validate(o);
    Grid g = core_of(o);
    nlohmann::json spec = spec_json("gen", o);
    if (!g.periodic()) {
        const KmaxResolution k = resolve_kmax(o);
        g = required_region(g, k.k_max);
        spec["kmax"] = k.k_max;
        spec["kmax_source"] = k.source;
    }
    const Configuration c = generate_configuration(o.dim, g, o.seed, o.bias);
    const std::string path = out_path(o, "config", ".eqmz");
    save_configuration(path, c);
    nlohmann::json meta = configuration_metadata(c);
    meta["spec"] = spec;
    write_json(path + ".json", meta);
    std::cout << "wrote " << path << " (" << g.size() << " sites, " << c.ones() << " ones)\n";
    return 0;
}

int cmd_match(const Options& o)
{
    validate(o);
    nlohmann::json spec = spec_json("match", o);
    Configuration c;
    Grid core = core_of(o);
    if (!o.input.empty()) {
        c = load_configuration(o.input);
        if (c.dim() != o.dim) {
            throw ArgumentError("--dim does not match the input configuration");
        }
        if (c.grid().periodic()) {
            core = c.grid();
        }
    }

    StagedMatching m;
    std::optional<ClumpHierarchy> h;
    if (o.rule == "meshalkin") {
        if (o.input.empty()) {
            c = generate_configuration(o.dim, core, o.seed, o.bias);
        }
        m = staged_from_meshalkin(meshalkin_lift(c, axis_of(o)));
    } else {
        const KmaxResolution k = resolve_kmax(o);
        spec["kmax"] = k.k_max;
        spec["kmax_source"] = k.source;
        if (o.input.empty()) {
            c = generate_configuration(o.dim, required_region(core, k.k_max), o.seed, o.bias);
        }
        h = build_clump_hierarchy(c, k.k_max, core);
        m = build_matching(c, *h);
        std::cout << "K_max " << k.k_max << " (" << k.source << "), truncation residual "
                  << format_double(h->truncation().residual_bound) << '\n';
    }

    const std::vector<std::string> formats = o.format.empty() ? std::vector<std::string>{"csv", "json"} : o.format;
    if (std::find(formats.begin(), formats.end(), "csv") != formats.end()) {
        const std::string path = out_path(o, "matching", ".csv");
        std::ofstream f(path);
        write_provenance_comment(f, spec);
        write_matching_csv(f, m.base, m.k_max > 0 ? std::span<const std::int32_t>(m.bad_level)
                                                  : std::span<const std::int32_t>());
        std::cout << "wrote " << path << '\n';
    }
    if (std::find(formats.begin(), formats.end(), "json") != formats.end()) {
        nlohmann::json summary = matching_summary(m, h ? &*h : nullptr);
        summary["spec"] = spec;
        const std::string path = out_path(o, "matching", ".json");
        write_json(path, summary);
        std::cout << "wrote " << path << '\n';
    }
    const bool seeds = std::find(formats.begin(), formats.end(), "seeds") != formats.end();
    const bool cuts = std::find(formats.begin(), formats.end(), "cutlevels") != formats.end();
    if ((seeds || cuts) && !h) {
        throw ArgumentError("seeds and cutlevels dumps need --rule clump");
    }
    if (seeds) {
        const std::string path = out_path(o, "matching", ".seeds.csv");
        std::ofstream f(path);
        write_seeds_csv(f, c, h->k_max(), core, spec);
        std::cout << "wrote " << path << '\n';
    }
    if (cuts) {
        const std::string path = out_path(o, "matching", ".cutlevels.csv");
        std::ofstream f(path);
        write_cutlevels_csv(f, compute_edge_cutlevels(c, h->k_max(), core), spec);
        std::cout << "wrote " << path << '\n';
    }
    std::cout << m.base.pair_count() << " pairs, " << m.base.censored_count() << " censored\n";
    return 0;
}

std::pair<double, double> parse_range(const std::string& text, const std::vector<Coord>& radii)
{
    if (text.empty()) {
        return {static_cast<double>(radii.front()), static_cast<double>(radii.back())};
    }
    const auto dots = text.find("..");
    if (dots == std::string::npos) {
        throw ArgumentError("--fit-range must look like lo..hi");
    }
    return {std::stod(text.substr(0, dots)), std::stod(text.substr(dots + 2))};
}

int cmd_tail(const Options& o)
{
    validate(o);
    TailSpec t;
    t.rule = o.rule == "meshalkin" ? Rule::Meshalkin : Rule::Clump;
    t.dim = o.dim;
    t.side = o.side;
    t.geometry = geometry_of(o);
    t.axis = axis_of(o);
    t.trials = o.trials;
    t.seed = o.seed;
    t.bias = o.bias;
    t.radii = parse_radii(o.radii);
    t.policy = o.policy == "survivor" ? CensorPolicy::AsSurvivor : CensorPolicy::Exclude;
    t.exact_only = o.exact_only;

    nlohmann::json spec = spec_json("tail", o);
    if (t.rule == Rule::Clump) {
        const KmaxResolution k = resolve_kmax(o);
        t.k_max = k.k_max;
        spec["kmax"] = k.k_max;
        spec["kmax_source"] = k.source;
        spec["truncation_residual"] = k.residual;
        std::cout << "K_max " << k.k_max << " (" << k.source << "), truncation residual "
                  << format_double(k.residual) << '\n';
    }
    const SurvivalCurve curve = estimate_tail(t);
    const auto [lo, hi] = parse_range(o.fit_range, t.radii);

    nlohmann::json result;
    result["spec"] = spec;
    result["curve"] = survival_json(curve);
    std::optional<FitResult> fit;
    try {
        fit = fit_exponent(curve, lo, hi);
        result["fit"] = {{"r_lo", lo}, {"r_hi", hi}, {"slope", fit->slope}, {"stderr", fit->stderr_slope},
                         {"intercept", fit->intercept}, {"points", fit->points}};
        std::cout << "slope " << format_double(fit->slope) << " +/- " << format_double(fit->stderr_slope) << " over ["
                  << lo << ", " << hi << "]\n";
    } catch (const DegenerateSample& e) {
        result["fit"] = {{"error", e.what()}};
        std::cout << "fit skipped: " << e.what() << '\n';
    }
    if (t.rule == Rule::Clump && curve.p_hat.front() > 0.0) {
        const DominationResult dom =
            check_domination(curve, o.dim, static_cast<double>(t.radii.front()), lo, hi, BoundVariant::Main);
        result["domination"] = {{"r_ref", t.radii.front()},
                                {"constant", dom.constant},
                                {"dominated", dom.dominated},
                                {"worst_ratio", dom.worst_ratio}};
    }
    result["reference_exponents"] = {{"main", bound_exponent(o.dim, BoundVariant::Main)},
                                     {"preliminary", bound_exponent(o.dim, BoundVariant::Preliminary)},
                                     {"ceiling", bound_exponent(o.dim, BoundVariant::Ceiling)}};

    const std::vector<std::string> formats = o.format.empty() ? std::vector<std::string>{"csv", "json"} : o.format;
    for (const auto& f : formats) {
        if (f == "csv") {
            const std::string path = out_path(o, "tail", ".csv");
            std::ofstream s(path);
            write_survival_csv(s, curve, spec);
            std::cout << "wrote " << path << '\n';
        } else if (f == "json") {
            const std::string path = out_path(o, "tail", ".json");
            write_json(path, result);
            std::cout << "wrote " << path << '\n';
        } else if (f == "svg") {
            const std::string path = out_path(o, "tail", ".svg");
            std::ofstream s(path);
            write_survival_svg(s, curve, o.dim, fit);
            std::cout << "wrote " << path << '\n';
        }
    }
    return 0;
}

int cmd_verify(const Options& o)
{
    validate(o);
    if (o.rule != "clump") {
        throw ArgumentError("verify checks the clump rule; drop --rule meshalkin");
    }
    const KmaxResolution k = resolve_kmax(o);
    const Grid core = core_of(o);
    nlohmann::json spec = spec_json("verify", o);
    spec["kmax"] = k.k_max;

    nlohmann::json trials = nlohmann::json::array();
    std::size_t failed = 0;
    for (std::uint64_t t = 0; t < o.trials; ++t) {
        const std::uint64_t s = derive_seed(o.seed, t);
        const Configuration c = generate_configuration(o.dim, required_region(core, k.k_max), s, o.bias);
        const VerifyReport r = verify_configuration(c, k.k_max, core, derive_seed(s, 1));
        if (!r.passed()) {
            ++failed;
            trials.push_back({{"trial", t}, {"checks", r.to_json()}});
            for (const auto& chk : r.checks) {
                if (!chk.passed) {
                    std::cout << "trial " << t << ": " << chk.name << " FAILED: " << chk.detail << '\n';
                }
            }
        }
    }
    nlohmann::json result{{"spec", spec}, {"trials", o.trials}, {"failed_trials", failed}, {"failures", trials}};
    if (!o.out.empty()) {
        write_json(o.out + ".json", result);
    }
    std::cout << o.trials - failed << "/" << o.trials << " configurations passed every check\n";
    return failed == 0 ? 0 : kExitVerify;
}

int cmd_events(const Options& o)
{
    validate(o);
    const std::vector<Coord> ks = parse_radii(o.levels);
    const std::vector<Coord> ss = parse_radii(o.scales);
    nlohmann::json spec = spec_json("events", o);
    std::ostringstream table;
    write_provenance_comment(table, spec);
    table << "event,k,s,hits,trials,p_hat,stderr,bound,within\n";
    const auto row = [&](const char* kind, Coord k, const std::string& s, const ProportionEstimate& e) {
        table << kind << ',' << k << ',' << s << ',' << e.hits << ',' << e.trials << ',' << format_double(e.p_hat)
              << ',' << format_double(e.stderr_p) << ',' << format_double(e.bound) << ','
              << (e.within ? "yes" : "no") << '\n';
    };
    for (const Coord k : ks) {
        row("not_enclosed", k, "", estimate_enclosure_failure(o.dim, static_cast<int>(k), o.trials, o.seed));
        for (const Coord s : ss) {
            row("cutter_hits", k, std::to_string(s),
                estimate_cutter_hits(o.dim, static_cast<int>(k), static_cast<double>(s), o.trials, o.seed));
        }
    }
    const std::string path = out_path(o, "events", ".csv");
    std::ofstream f(path);
    f << table.str();
    std::cout << table.str();
    return 0;
}

// Expands `--config FILE` into flags. Keys given on the command line win.
std::vector<std::string> expand_config(int argc, char** argv)
{
    std::vector<std::string> args(argv, argv + argc);
    const auto at = std::find(args.begin(), args.end(), "--config");
    if (at == args.end()) {
        return args;
    }
    if (at + 1 == args.end()) {
        throw ArgumentError("--config needs a file");
    }
    const std::string path = *(at + 1);
    std::ifstream f(path);
    if (!f) {
        throw ArgumentError("cannot read config file " + path);
    }
    const auto pos = args.erase(at, at + 2);
    const auto given = [&](const std::string& key) {
        return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
            return a == "--" + key || a.rfind("--" + key + "=", 0) == 0;
        });
    };
    const auto trim = [](std::string v) {
        const auto b = v.find_first_not_of(" \t\r");
        const auto e = v.find_last_not_of(" \t\r");
        v = b == std::string::npos ? "" : v.substr(b, e - b + 1);
        if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
            v = v.substr(1, v.size() - 2);
        }
        return v;
    };
    std::vector<std::string> extra;
    std::string line;
    int n = 0;
    while (std::getline(f, line)) {
        ++n;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ArgumentError(path + ":" + std::to_string(n) + ": expected key=value");
        }
        std::string key = trim(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '_', '-');
        if (!given(key)) {
            extra.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
        }
    }
    args.insert(pos, extra.begin(), extra.end());
    return args;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Translation-equivariant matchings of coin flips on Z^d"};
    app.require_subcommand(1);
    Options o;

    const auto common = [&](CLI::App* sub) {
        sub->add_option("--config", "key=value file mirroring the flags");
        sub->add_option("--dim", o.dim, "lattice dimension")->capture_default_str();
        sub->add_option("--side", o.side, "side length of the core window or torus")->capture_default_str();
        auto* margin = sub->add_option("--margin", o.margin, "window halo width (implies K_max)");
        auto* kmax = sub->add_option("--kmax", o.kmax, "largest cutter level");
        margin->excludes(kmax);
        kmax->excludes(margin);
        sub->add_option("--seed", o.seed, "rng seed")->capture_default_str();
        sub->add_option("--bias", o.bias, "probability of a head")->capture_default_str();
        sub->add_option("--geometry", o.geometry, "window or torus")
            ->check(CLI::IsMember({"window", "torus"}))
            ->capture_default_str();
        sub->add_option("--out", o.out, "output path prefix");
    };
    const auto rule = [&](CLI::App* sub) {
        sub->add_option("--rule", o.rule, "meshalkin or clump")
            ->check(CLI::IsMember({"meshalkin", "clump"}))
            ->capture_default_str();
        sub->add_option("--axis", o.axis, "Meshalkin line axis, 1-based (default: the last)");
    };

    auto* gen = app.add_subcommand("gen", "write a configuration file");
    common(gen);
    auto* match = app.add_subcommand("match", "write a matching as CSV plus a JSON summary");
    common(match);
    rule(match);
    match->add_option("--input", o.input, "configuration file instead of generating one");
    match->add_option("--format", o.format, "csv, json, seeds, cutlevels")->delimiter(',');
    auto* tail = app.add_subcommand("tail", "estimate P(Z > r) and fit its exponent");
    common(tail);
    rule(tail);
    tail->add_option("--trials", o.trials, "independent configurations")->capture_default_str();
    tail->add_option("--radii", o.radii, "a..b, a..b:n (log-spaced) or r1,r2,...")->capture_default_str();
    tail->add_option("--fit-range", o.fit_range, "lo..hi radius window for the slope fit");
    tail->add_option("--policy", o.policy, "censored sites: exclude or survivor")
        ->check(CLI::IsMember({"exclude", "survivor"}))
        ->capture_default_str();
    tail->add_flag("--exact-only", o.exact_only, "count only pairs whose clump stays clear of the window boundary");
    tail->add_option("--format", o.format, "csv, json, svg")->delimiter(',');
    auto* verify = app.add_subcommand("verify", "run the property checks on random configurations");
    common(verify);
    rule(verify);
    verify->add_option("--trials", o.trials, "configurations to check")->capture_default_str();
    auto* events = app.add_subcommand("events", "event frequencies against their bounds");
    common(events);
    events->add_option("--trials", o.trials, "independent fields")->capture_default_str();
    events->add_option("--k", o.levels, "cutter levels, e.g. 4 or 4..7")->capture_default_str();
    events->add_option("--s", o.scales, "box half-widths, e.g. 4,16")->capture_default_str();

    try {
        std::vector<std::string> args = expand_config(argc, argv);
        std::vector<char*> ptrs;
        for (auto& a : args) {
            ptrs.push_back(a.data());
        }
        app.parse(static_cast<int>(ptrs.size()), ptrs.data());
    } catch (const ArgumentError& e) {
        std::cerr << "invalid arguments: " << e.what() << '\n';
        return kExitArgs;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitArgs;
    }

    try {
        if (gen->parsed()) {
            return cmd_gen(o);
        }
        if (match->parsed()) {
            return cmd_match(o);
        }
        if (tail->parsed()) {
            return cmd_tail(o);
        }
        if (verify->parsed()) {
            return cmd_verify(o);
        }
        return cmd_events(o);
    } catch (const UndecidableError& e) {
        std::cerr << "undecidable: " << e.what() << "\nrerun with a larger --margin (or --kmax) so the halo fits\n";
        return kExitUndecidable;
    } catch (const ArgumentError& e) {
        std::cerr << "invalid arguments: " << e.what() << '\n';
        return kExitArgs;
    } catch (const RangeError& e) {
        std::cerr << "invalid arguments: " << e.what() << '\n';
        return kExitArgs;
    } catch (const FormatError& e) {
        std::cerr << "bad input: " << e.what() << '\n';
        return kExitArgs;
    } catch (const DegenerateSample& e) {
        std::cerr << "degenerate sample: " << e.what() << '\n';
        return kExitVerify;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitVerify;
    }
}
