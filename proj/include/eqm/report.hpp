#pragma once
// Output formats. Every payload carries the run's parameters and the library
// version; nothing depends on wall-clock time, so identical runs produce
// identical bytes.

#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "eqm/stats.hpp"

namespace eqm {

#ifndef EQM_VERSION
#define EQM_VERSION "0.0.0"
#endif

inline constexpr const char* kVersion = EQM_VERSION;

// Shortest round-trip decimal form.
std::string format_double(double v);

// "# key=value" header lines from a flat json object, then the data rows.
void write_provenance_comment(std::ostream& out, const nlohmann::json& provenance);

// r, survivors, at_risk, p_hat, ci_lo, ci_hi
void write_survival_csv(std::ostream& out, const SurvivalCurve& curve, const nlohmann::json& provenance);
nlohmann::json survival_json(const SurvivalCurve& curve);

// level, x_1..x_d for the seed of every cutter of level 2..k_max that
// separates core sites.
void write_seeds_csv(std::ostream& out, const Configuration& c, int k_max, const Grid& core,
                     const nlohmann::json& provenance);
// x_1..x_d, axis, level for every core edge with a nonzero cut level.
void write_cutlevels_csv(std::ostream& out, const EdgeCutLevels& levels, const nlohmann::json& provenance);

// Log-log plot of the curve with its confidence band and the three reference
// curves scaled through the first plotted point.
void write_survival_svg(std::ostream& out, const SurvivalCurve& curve, int d, const std::optional<FitResult>& fit);

} // namespace eqm
