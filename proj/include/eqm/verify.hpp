#pragma once
// Property checks for one configuration, shared by the command-line verifier
// and the test suites.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "eqm/matching_rule.hpp"

namespace eqm {

struct CheckResult {
    std::string name;
    bool passed = true;
    std::string detail; // first failure
};

struct VerifyReport {
    std::vector<CheckResult> checks;

    bool passed() const;
    nlohmann::json to_json() const;
};

// Per-level clump labels recomputed by breadth-first search over the edges
// whose cut level is <= k. Labels are the smallest site index of each clump.
std::vector<std::size_t> bfs_clump_labels(const EdgeCutLevels& e, int k);
// True when two labelings induce the same partition.
bool same_partition(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

// Matching validity, stage maximality, hierarchy vs breadth-first search and
// the zeta bookkeeping; on a torus also the unmatched count, translation
// equivariance under a shift drawn from `shift_seed`, the k-bad identity at
// every level and exact mass-transport accounting.
VerifyReport verify_configuration(const Configuration& c, int k_max, const Grid& core, std::uint64_t shift_seed);

} // namespace eqm
