#pragma once
// Meshalkin bracket matching: zeros open, ones close. Along a line, a zero is
// paired with the one that closes it; lattices of dimension d >= 2 are matched
// line by line along one axis.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "eqm/lattice.hpp"

namespace eqm {

enum class Topology { Line, Cycle };

// partner[i] = index matched with i, or -1.
using LinePartners = std::vector<std::int64_t>;

// O(n) stack matching. On a cycle the scan starts right after a minimum of the
// +1/-1 walk, which leaves a one-coloured residue.
LinePartners meshalkin_match_line(std::span<const std::uint8_t> bits, Topology topology);

// Independent O(n^2) route: repeated simultaneous removal of adjacent (0, 1) pairs.
LinePartners naive_bracket_oracle(std::span<const std::uint8_t> bits, Topology topology);

// Parses "0110 0111" style strings; whitespace is ignored.
std::vector<std::uint8_t> parse_bits(const std::string& text);

inline constexpr std::int32_t kUnmatchedStage = -1;

// Partial involution over the sites of `grid`.
struct Matching {
    Grid grid;
    std::vector<std::int64_t> partner;  // -1 when unmatched
    std::vector<std::int32_t> stage;    // pairing stage, kUnmatchedStage when unmatched
    std::vector<std::uint8_t> censored; // unmatched at the end of the finite run

    explicit Matching(Grid g = {});

    bool matched(std::size_t i) const { return partner[i] >= 0; }
    void pair(std::size_t a, std::size_t b, std::int32_t at_stage);
    std::size_t pair_count() const;
    std::size_t censored_count() const;
    // Marks every unmatched site as censored.
    void close();
};

// Lines parallel to `axis` (1-based) are matched independently: cycles on a
// torus, plain lines on a window. Partners differ only in the axis coordinate.
Matching meshalkin_lift(const Configuration& c, int axis);

// Empty string when the matching is an involution pairing opposite bits with
// no site both matched and censored; otherwise a description of the first fault.
std::string check_matching(const Configuration& c, const Matching& m);

// CSV: site_1..site_d, partner_1..partner_d, stage, censored[, bad_level].
// Unmatched sites leave partner columns empty. bad_level < 0 is written as "inf".
void write_matching_csv(std::ostream& out, const Matching& m, std::span<const std::int32_t> bad_level = {});

} // namespace eqm
