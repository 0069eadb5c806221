#pragma once
// Binary configuration files and their JSON metadata sidecar.
//
// Layout (little-endian):
//   "EQMZ" | u32 version | u32 d | u8 geometry (0 window, 1 torus)
//   | i64 corner[d] | u64 sides[d] | u64 rng_seed | f64 bias | u64 n_sites
//   | ceil(n_sites / 8) bytes of row-major bits, least significant bit first

#include <cstdint>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "eqm/lattice.hpp"

namespace eqm {

inline constexpr std::uint32_t kConfigFormatVersion = 1;

void write_configuration(std::ostream& out, const Configuration& c);
Configuration read_configuration(std::istream& in);

nlohmann::json configuration_metadata(const Configuration& c);

void save_configuration(const std::string& path, const Configuration& c);  // also writes path + ".json"
Configuration load_configuration(const std::string& path);

} // namespace eqm
