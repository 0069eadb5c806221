#include "eqm/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <ostream>
#include <vector>

namespace eqm {

std::string format_double(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

void write_provenance_comment(std::ostream& out, const nlohmann::json& provenance)
{
    out << "# eqm " << kVersion << '\n';
    for (const auto& [key, value] : provenance.items()) {
        out << "# " << key << '=' << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
    }
}

void write_survival_csv(std::ostream& out, const SurvivalCurve& curve, const nlohmann::json& provenance)
{
    write_provenance_comment(out, provenance);
    out << "r,survivors,at_risk,p_hat,ci_lo,ci_hi\n";
    for (std::size_t i = 0; i < curve.radii.size(); ++i) {
        out << curve.radii[i] << ',' << curve.survivors[i] << ',' << curve.at_risk[i] << ','
            << format_double(curve.p_hat[i]) << ',' << format_double(curve.ci_lo[i]) << ','
            << format_double(curve.ci_hi[i]) << '\n';
    }
}

void write_seeds_csv(std::ostream& out, const Configuration& c, int k_max, const Grid& core,
                     const nlohmann::json& provenance)
{
    write_provenance_comment(out, provenance);
    const int d = core.dim();
    out << "level";
    for (int a = 1; a <= d; ++a) {
        out << ",x_" << a;
    }
    out << '\n';
    for (int k = 2; k <= k_max; ++k) {
        const Site s = shift_s(k, d);
        for (const Cutter& cut : cutters_for_level(c, k, core)) {
            const Site p = core.periodic() ? core.wrap(cut.center - s) : cut.center - s;
            out << k;
            for (int a = 0; a < d; ++a) {
                out << ',' << p[a];
            }
            out << '\n';
        }
    }
}

void write_cutlevels_csv(std::ostream& out, const EdgeCutLevels& levels, const nlohmann::json& provenance)
{
    write_provenance_comment(out, provenance);
    const Grid& g = levels.grid();
    const int d = g.dim();
    for (int a = 1; a <= d; ++a) {
        out << "x_" << a << ',';
    }
    out << "axis,level\n";
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (int a = 0; a < d; ++a) {
            const int level = levels.level(i, a);
            if (level == 0) {
                continue;
            }
            const Site x = g.site(i);
            for (int b = 0; b < d; ++b) {
                out << x[b] << ',';
            }
            out << a + 1 << ',' << level << '\n';
        }
    }
}

nlohmann::json survival_json(const SurvivalCurve& curve)
{
    return {{"radii", curve.radii},     {"survivors", curve.survivors}, {"at_risk", curve.at_risk},
            {"p_hat", curve.p_hat},     {"ci_lo", curve.ci_lo},         {"ci_hi", curve.ci_hi},
            {"trials", curve.trials},   {"sites", curve.sites},         {"censored", curve.censored}};
}

void write_survival_svg(std::ostream& out, const SurvivalCurve& curve, int d, const std::optional<FitResult>& fit)
{
    constexpr double width = 640.0;
    constexpr double height = 480.0;
    constexpr double pad = 60.0;

    std::vector<std::size_t> shown;
    for (std::size_t i = 0; i < curve.radii.size(); ++i) {
        if (curve.p_hat[i] > 0.0) {
            shown.push_back(i);
        }
    }
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (shown.size() < 2) {
        out << "<text x=\"" << pad << "\" y=\"" << pad << "\">not enough survivors to plot</text>\n</svg>\n";
        return;
    }

    const double x0 = std::log10(static_cast<double>(curve.radii[shown.front()]));
    const double x1 = std::log10(static_cast<double>(curve.radii[shown.back()]));
    double y0 = 0.0;
    double y1 = -1.0;
    for (std::size_t i : shown) {
        y0 = std::min(y0, std::log10(std::max(curve.ci_lo[i], curve.p_hat[i] / 10.0)));
    }
    y0 = std::floor(y0);
    const auto px = [&](double r) { return pad + (std::log10(r) - x0) / std::max(x1 - x0, 1e-9) * (width - 2 * pad); };
    const auto py = [&](double p) {
        return height - pad - (std::log10(std::max(p, 1e-300)) - y0) / (y1 + 1.0 - y0) * (height - 2 * pad);
    };

    out << "<line x1=\"" << pad << "\" y1=\"" << height - pad << "\" x2=\"" << width - pad << "\" y2=\""
        << height - pad << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << height - pad
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">r (log scale)</text>\n";
    out << "<text x=\"15\" y=\"" << height / 2 << "\" transform=\"rotate(-90 15 " << height / 2
        << ")\" text-anchor=\"middle\">P(Z &gt; r)</text>\n";
    for (double e = y0; e <= y1 + 1.0; e += 1.0) {
        out << "<text x=\"" << pad - 8 << "\" y=\"" << format_double(py(std::pow(10.0, e)))
            << "\" text-anchor=\"end\" font-size=\"10\">1e" << e << "</text>\n";
    }

    const auto polyline = [&](const std::vector<std::pair<double, double>>& pts, const char* colour,
                              const char* dash) {
        out << "<polyline fill=\"none\" stroke=\"" << colour << "\"" << dash << " points=\"";
        for (const auto& [r, p] : pts) {
            out << format_double(px(r)) << ',' << format_double(py(p)) << ' ';
        }
        out << "\"/>\n";
    };

    std::vector<std::pair<double, double>> band_hi;
    std::vector<std::pair<double, double>> band_lo;
    std::vector<std::pair<double, double>> centre;
    for (std::size_t i : shown) {
        const auto r = static_cast<double>(curve.radii[i]);
        centre.emplace_back(r, curve.p_hat[i]);
        band_hi.emplace_back(r, curve.ci_hi[i]);
        band_lo.emplace_back(r, std::max(curve.ci_lo[i], 1e-300));
    }
    polyline(band_hi, "#9ab", " stroke-dasharray=\"2,2\"");
    polyline(band_lo, "#9ab", " stroke-dasharray=\"2,2\"");
    polyline(centre, "black", "");

    const double r_ref = centre.front().first;
    const double p_ref = centre.front().second;
    const std::array<std::pair<BoundVariant, const char*>, 3> refs = {
        std::pair{BoundVariant::Main, "#c33"}, std::pair{BoundVariant::Preliminary, "#36c"},
        std::pair{BoundVariant::Ceiling, "#393"}};
    const std::array<const char*, 3> labels = {"(ln r)^4 r^-2d/(d+4)", "(ln r)^2 r^-d/(d+2)", "r^-d/2"};
    for (std::size_t v = 0; v < refs.size(); ++v) {
        const double c = p_ref / theoretical_bound(std::max(r_ref, 1.5), d, 1.0, refs[v].first);
        std::vector<std::pair<double, double>> pts;
        for (const auto& [r, p] : centre) {
            pts.emplace_back(r, theoretical_bound(std::max(r, 1.5), d, c, refs[v].first));
        }
        polyline(pts, refs[v].second, " stroke-dasharray=\"6,3\"");
        out << "<text x=\"" << width - pad - 150 << "\" y=\"" << pad + 15.0 * static_cast<double>(v) << "\" fill=\""
            << refs[v].second << "\" font-size=\"11\">" << labels[v] << "</text>\n";
    }
    if (fit) {
        out << "<text x=\"" << pad + 10 << "\" y=\"" << pad + 10 << "\" font-size=\"11\">slope "
            << format_double(fit->slope) << " +/- " << format_double(fit->stderr_slope) << "</text>\n";
    }
    out << "</svg>\n";
}

} // namespace eqm
