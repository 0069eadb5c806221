#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "eqm/config_io.hpp"
#include "eqm/errors.hpp"

using namespace eqm;

namespace {

Configuration round_trip(const Configuration& c)
{
    std::stringstream buf;
    write_configuration(buf, c);
    return read_configuration(buf);
}

} // namespace

TEST_CASE("configuration files round-trip")
{
    const Configuration w = generate_configuration(2, Grid::window(Site{-7, 3}, Site{13, 29}), 11, 0.5);
    const Configuration back = round_trip(w);
    CHECK(back == w);
    CHECK(back.grid() == w.grid());
    CHECK(back.rng_seed() == 11);
    CHECK(back.bias() == 0.5);

    const Configuration t = generate_configuration(3, Grid::torus(Site{4, 5, 7}), 12, 0.3);
    CHECK(round_trip(t) == t);
    CHECK(round_trip(t).grid().periodic());

    // Sizes that end mid-word and mid-byte.
    for (Coord n : {1, 7, 8, 63, 64, 65, 130}) {
        const Configuration c = generate_configuration(1, Grid::torus(Site{n}), 3, 0.5);
        CHECK(round_trip(c) == c);
    }
}

TEST_CASE("header layout")
{
    const Configuration c = configuration_from_bits(Grid::torus(Site{3}), {1, 0, 1});
    std::stringstream buf;
    write_configuration(buf, c);
    const std::string raw = buf.str();
    // magic, version, d, tag, corner, side, seed, bias, n, one payload byte
    CHECK(raw.size() == 4 + 4 + 4 + 1 + 8 + 8 + 8 + 8 + 8 + 1);
    CHECK(raw.substr(0, 4) == "EQMZ");
    CHECK(static_cast<unsigned char>(raw[12]) == 1);
    CHECK(static_cast<unsigned char>(raw.back()) == 0b101);
}

TEST_CASE("malformed input is rejected")
{
    std::stringstream bad("NOPE and then some bytes");
    CHECK_THROWS_AS(read_configuration(bad), FormatError);

    const Configuration c = generate_configuration(1, Grid::torus(Site{100}), 3, 0.5);
    std::stringstream buf;
    write_configuration(buf, c);
    std::string raw = buf.str();
    std::stringstream truncated(raw.substr(0, raw.size() - 3));
    CHECK_THROWS_AS(read_configuration(truncated), FormatError);

    std::string wrong_version = raw;
    wrong_version[4] = 9;
    std::stringstream v(wrong_version);
    CHECK_THROWS_AS(read_configuration(v), FormatError);
}

TEST_CASE("save and load with metadata sidecar")
{
    const auto dir = std::filesystem::temp_directory_path() / "eqm_config_io_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "c.eqmz").string();
    const Configuration c = generate_configuration(2, Grid::torus(Site{8, 8}), 99, 0.5);
    save_configuration(path, c);
    CHECK(load_configuration(path) == c);

    std::ifstream meta(path + ".json");
    REQUIRE(meta.good());
    const nlohmann::json j = nlohmann::json::parse(meta);
    CHECK(j["geometry"] == "torus");
    CHECK(j["n_sites"] == 64);
    CHECK(j["ones"] == c.ones());
    CHECK(j["rng_seed"] == 99);
    CHECK(configuration_metadata(c) == j);
    std::filesystem::remove_all(dir);
    CHECK_THROWS(load_configuration(path));
}
