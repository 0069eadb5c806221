#include "eqm/config_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "eqm/errors.hpp"

namespace eqm {

namespace {

template <class T>
void put(std::ostream& out, T value)
{
    static_assert(std::is_trivially_copyable_v<T>);
    std::uint64_t raw = 0;
    std::memcpy(&raw, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.put(static_cast<char>((raw >> (8 * i)) & 0xFF));
    }
}

template <class T>
T get(std::istream& in)
{
    std::uint64_t raw = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        const int ch = in.get();
        if (ch == std::char_traits<char>::eof()) {
            throw FormatError("truncated configuration file");
        }
        raw |= static_cast<std::uint64_t>(static_cast<unsigned char>(ch)) << (8 * i);
    }
    T value;
    std::memcpy(&value, &raw, sizeof(T));
    return value;
}

} // namespace

void write_configuration(std::ostream& out, const Configuration& c)
{
    const Grid& g = c.grid();
    out.write("EQMZ", 4);
    put<std::uint32_t>(out, kConfigFormatVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.dim()));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(g.kind()));
    for (int a = 0; a < g.dim(); ++a) {
        put<std::int64_t>(out, g.lower()[a]);
    }
    for (int a = 0; a < g.dim(); ++a) {
        put<std::uint64_t>(out, static_cast<std::uint64_t>(g.sides()[a]));
    }
    put<std::uint64_t>(out, c.rng_seed());
    put<double>(out, c.bias());
    put<std::uint64_t>(out, g.size());
    const std::size_t nbytes = (g.size() + 7) / 8;
    const auto words = c.words();
    for (std::size_t b = 0; b < nbytes; ++b) {
        out.put(static_cast<char>((words[b / 8] >> (8 * (b % 8))) & 0xFF));
    }
    if (!out) {
        throw FormatError("failed writing configuration");
    }
}

Configuration read_configuration(std::istream& in)
{
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "EQMZ", 4) != 0) {
        throw FormatError("bad magic: not an EQMZ configuration");
    }
    const auto version = get<std::uint32_t>(in);
    if (version != kConfigFormatVersion) {
        throw FormatError("unsupported configuration version " + std::to_string(version));
    }
    const auto d = static_cast<int>(get<std::uint32_t>(in));
    if (d < 1 || d > kMaxDim) {
        throw FormatError("bad dimension in configuration header");
    }
    const auto tag = get<std::uint8_t>(in);
    if (tag > 1) {
        throw FormatError("bad geometry tag");
    }
    Site corner(d);
    Site sides(d);
    for (int a = 0; a < d; ++a) {
        corner[a] = get<std::int64_t>(in);
    }
    for (int a = 0; a < d; ++a) {
        sides[a] = static_cast<Coord>(get<std::uint64_t>(in));
    }
    const auto seed = get<std::uint64_t>(in);
    const auto bias = get<double>(in);
    const auto n = get<std::uint64_t>(in);
    const Grid g = tag == 1 ? Grid::torus(sides) : Grid::window(corner, sides);
    if (n != g.size()) {
        throw FormatError("site count does not match sides");
    }
    std::vector<std::uint64_t> words((n + 63) / 64, 0);
    const std::size_t nbytes = (n + 7) / 8;
    for (std::size_t b = 0; b < nbytes; ++b) {
        const int ch = in.get();
        if (ch == std::char_traits<char>::eof()) {
            throw FormatError("truncated bit payload");
        }
        words[b / 8] |= static_cast<std::uint64_t>(static_cast<unsigned char>(ch)) << (8 * (b % 8));
    }
    if (n % 64 != 0) {
        words.back() &= (std::uint64_t{1} << (n % 64)) - 1;
    }
    return Configuration(g, seed, bias, std::move(words));
}

nlohmann::json configuration_metadata(const Configuration& c)
{
    const Grid& g = c.grid();
    nlohmann::json j;
    j["magic"] = "EQMZ";
    j["version"] = kConfigFormatVersion;
    j["dimension"] = g.dim();
    j["geometry"] = g.periodic() ? "torus" : "window";
    j["corner"] = std::vector<Coord>(g.lower().coords().begin(), g.lower().coords().end());
    j["sides"] = std::vector<Coord>(g.sides().coords().begin(), g.sides().coords().end());
    j["rng_seed"] = c.rng_seed();
    j["bias"] = c.bias();
    j["n_sites"] = g.size();
    j["ones"] = c.ones();
    return j;
}

void save_configuration(const std::string& path, const Configuration& c)
{
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw FormatError("cannot open " + path + " for writing");
        }
        write_configuration(out, c);
    }
    std::ofstream meta(path + ".json");
    meta << configuration_metadata(c).dump(2) << '\n';
}

Configuration load_configuration(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path);
    }
    return read_configuration(in);
}

} // namespace eqm
