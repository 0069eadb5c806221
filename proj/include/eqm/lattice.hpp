#pragma once
// Sites, boxes, window/torus grids and packed coin-flip configurations.
//
// Every site's bit is a keyed hash of (rng_seed, absolute coordinates), so a
// torus [0, L)^d and a window with corner 0 and sides L agree bit for bit, and
// overlapping windows drawn from the same seed are consistent restrictions of
// one field on Z^d.

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eqm {

inline constexpr int kMaxDim = 8;
using Coord = std::int64_t;

class Site {
public:
    Site() = default;
    explicit Site(int dim);
    Site(std::initializer_list<Coord> coords);

    static Site zeros(int dim) { return Site(dim); }
    // Unit vector along a 0-based axis.
    static Site unit(int dim, int axis);
    static Site filled(int dim, Coord value);

    int dim() const { return dim_; }
    Coord operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
    Coord& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }
    std::span<const Coord> coords() const { return {c_.data(), static_cast<std::size_t>(dim_)}; }

    Site operator+(const Site& o) const;
    Site operator-(const Site& o) const;
    Site operator-() const;
    Site& operator+=(const Site& o);
    bool operator==(const Site& o) const;

private:
    std::array<Coord, kMaxDim> c_{};
    int dim_ = 0;
};

std::string to_string(const Site& x);

enum class Ordering { Less, Equal, Greater };

// Plain l-infinity distance on Z^d.
Coord linf_distance(const Site& x, const Site& y);
// Torus variant: each coordinate difference is reduced to its minimal absolute residue.
Coord linf_distance(const Site& x, const Site& y, const Site& torus_sides);
Ordering lex_compare(const Site& x, const Site& y);

// Closed cube {x : ||x - center||_inf <= radius}.
struct BoxRegion {
    Site center;
    double radius = 0.0;

    bool contains(const Site& x) const;
};

enum class GeometryKind : std::uint8_t { Window = 0, Torus = 1 };

// A finite index space over Z^d: an axis-aligned window, or a periodic torus.
// Indices are row-major (last coordinate fastest), which makes index order
// coincide with lexicographic order of coordinates.
class Grid {
public:
    Grid() = default;
    static Grid window(const Site& corner, const Site& sides);
    static Grid torus(const Site& sides);

    int dim() const { return lower_.dim(); }
    GeometryKind kind() const { return kind_; }
    bool periodic() const { return kind_ == GeometryKind::Torus; }
    const Site& lower() const { return lower_; }
    const Site& sides() const { return sides_; }
    Site upper() const;  // inclusive upper corner
    std::size_t size() const { return size_; }
    std::size_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }
    Coord min_side() const;

    bool contains(const Site& x) const;
    // Torus: wraps x first. Window: x must be inside.
    std::size_t index(const Site& x) const;
    Site site(std::size_t index) const;
    Site wrap(const Site& x) const;
    // Index of x + e_axis, if it exists.
    std::optional<std::size_t> step(std::size_t index, int axis) const;
    Coord distance(const Site& x, const Site& y) const;
    // Largest r with the closed cube S(x, r) inside the window; torus: floor(min side / 2).
    Coord boundary_distance(const Site& x) const;

    bool operator==(const Grid& o) const;

private:
    void finish();

    GeometryKind kind_ = GeometryKind::Window;
    Site lower_;
    Site sides_;
    std::array<std::size_t, kMaxDim> strides_{};
    std::size_t size_ = 0;
};

// Keyed per-site draw: 1 with probability `bias`.
bool draw_site_bit(std::uint64_t rng_seed, double bias, const Site& x);
std::uint64_t mix64(std::uint64_t z);
// Independent sub-seed for trial `t` of an experiment seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t t);

class Configuration {
public:
    Configuration() = default;
    Configuration(Grid grid, std::uint64_t rng_seed, double bias, std::vector<std::uint64_t> words);

    const Grid& grid() const { return grid_; }
    int dim() const { return grid_.dim(); }
    std::uint64_t rng_seed() const { return rng_seed_; }
    double bias() const { return bias_; }
    std::size_t size() const { return grid_.size(); }

    bool bit(std::size_t index) const { return (words_[index >> 6] >> (index & 63)) & 1U; }
    // Throws UndecidableError when a window does not contain x.
    bool bit(const Site& x) const;
    bool covers(const Site& x) const { return grid_.contains(x); }
    std::size_t ones() const;
    std::span<const std::uint64_t> words() const { return words_; }

    bool operator==(const Configuration& o) const;

private:
    Grid grid_;
    std::uint64_t rng_seed_ = 0;
    double bias_ = 0.5;
    std::vector<std::uint64_t> words_;
};

Configuration generate_configuration(int dim, const Grid& geometry, std::uint64_t rng_seed, double bias);
// Builds a configuration from explicit bits in row-major order (tests, fixtures).
Configuration configuration_from_bits(const Grid& geometry, const std::vector<int>& bits);
// theta^z: result(x) = c(x - z). Torus only.
Configuration translate_configuration(const Configuration& c, const Site& z);

// The infinite keyed field; windows cut from it agree with generate_configuration.
class FieldSampler {
public:
    FieldSampler(int dim, std::uint64_t rng_seed, double bias);

    int dim() const { return dim_; }
    bool bit(const Site& x) const { return draw_site_bit(seed_, bias_, x); }
    Configuration window(const Site& corner, const Site& sides) const;

private:
    int dim_;
    std::uint64_t seed_;
    double bias_;
};

} // namespace eqm
