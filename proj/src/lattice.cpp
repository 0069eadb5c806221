#include "eqm/lattice.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "eqm/errors.hpp"
#include "eqm/parallel.hpp"

namespace eqm {

namespace {

void require_same_dim(const Site& x, const Site& y)
{
    if (x.dim() != y.dim()) {
        throw ArgumentError("dimension mismatch: " + std::to_string(x.dim()) + " vs " + std::to_string(y.dim()));
    }
}

void require_dim(int dim)
{
    if (dim < 1 || dim > kMaxDim) {
        throw ArgumentError("dimension must be in [1, " + std::to_string(kMaxDim) + "], got " + std::to_string(dim));
    }
}

Coord floor_mod(Coord a, Coord m)
{
    const Coord r = a % m;
    return r < 0 ? r + m : r;
}

std::uint64_t threshold_for(double bias)
{
    if (!(bias >= 0.0 && bias <= 1.0)) {
        throw ArgumentError("bias must lie in [0, 1]");
    }
    if (bias >= 1.0) {
        return std::uint64_t{1} << 53;
    }
    return static_cast<std::uint64_t>(std::ldexp(bias, 53));
}

std::uint64_t prefix_hash(std::uint64_t seed, const Site& x, int count)
{
    std::uint64_t h = mix64(seed);
    for (int a = 0; a < count; ++a) {
        h = mix64(h ^ static_cast<std::uint64_t>(x[a]));
    }
    return h;
}

} // namespace

Site::Site(int dim) : dim_(dim)
{
    require_dim(dim);
}

Site::Site(std::initializer_list<Coord> coords) : dim_(static_cast<int>(coords.size()))
{
    require_dim(dim_);
    std::copy(coords.begin(), coords.end(), c_.begin());
}

Site Site::unit(int dim, int axis)
{
    Site s(dim);
    if (axis < 0 || axis >= dim) {
        throw ArgumentError("axis out of range");
    }
    s[axis] = 1;
    return s;
}

Site Site::filled(int dim, Coord value)
{
    Site s(dim);
    for (int i = 0; i < dim; ++i) {
        s[i] = value;
    }
    return s;
}

Site Site::operator+(const Site& o) const
{
    require_same_dim(*this, o);
    Site r(*this);
    for (int i = 0; i < dim_; ++i) {
        r[i] += o[i];
    }
    return r;
}

Site Site::operator-(const Site& o) const
{
    require_same_dim(*this, o);
    Site r(*this);
    for (int i = 0; i < dim_; ++i) {
        r[i] -= o[i];
    }
    return r;
}

Site Site::operator-() const
{
    Site r(*this);
    for (int i = 0; i < dim_; ++i) {
        r[i] = -r[i];
    }
    return r;
}

Site& Site::operator+=(const Site& o)
{
    require_same_dim(*this, o);
    for (int i = 0; i < dim_; ++i) {
        c_[static_cast<std::size_t>(i)] += o[i];
    }
    return *this;
}

bool Site::operator==(const Site& o) const
{
    return dim_ == o.dim_ && std::equal(c_.begin(), c_.begin() + dim_, o.c_.begin());
}

std::string to_string(const Site& x)
{
    std::ostringstream os;
    os << '(';
    for (int i = 0; i < x.dim(); ++i) {
        os << (i ? "," : "") << x[i];
    }
    os << ')';
    return os.str();
}

Coord linf_distance(const Site& x, const Site& y)
{
    require_same_dim(x, y);
    Coord best = 0;
    for (int i = 0; i < x.dim(); ++i) {
        best = std::max(best, std::abs(x[i] - y[i]));
    }
    return best;
}

Coord linf_distance(const Site& x, const Site& y, const Site& torus_sides)
{
    require_same_dim(x, y);
    require_same_dim(x, torus_sides);
    Coord best = 0;
    for (int i = 0; i < x.dim(); ++i) {
        const Coord r = floor_mod(x[i] - y[i], torus_sides[i]);
        best = std::max(best, std::min(r, torus_sides[i] - r));
    }
    return best;
}

Ordering lex_compare(const Site& x, const Site& y)
{
    require_same_dim(x, y);
    for (int i = 0; i < x.dim(); ++i) {
        if (x[i] != y[i]) {
            return x[i] < y[i] ? Ordering::Less : Ordering::Greater;
        }
    }
    return Ordering::Equal;
}

bool BoxRegion::contains(const Site& x) const
{
    return static_cast<double>(linf_distance(x, center)) <= radius;
}

// ---------------------------------------------------------------------------

Grid Grid::window(const Site& corner, const Site& sides)
{
    require_same_dim(corner, sides);
    Grid g;
    g.kind_ = GeometryKind::Window;
    g.lower_ = corner;
    g.sides_ = sides;
    g.finish();
    return g;
}

Grid Grid::torus(const Site& sides)
{
    Grid g;
    g.kind_ = GeometryKind::Torus;
    g.lower_ = Site::zeros(sides.dim());
    g.sides_ = sides;
    g.finish();
    return g;
}

void Grid::finish()
{
    require_dim(sides_.dim());
    std::size_t n = 1;
    for (int a = dim() - 1; a >= 0; --a) {
        if (sides_[a] < 1) {
            throw ArgumentError("side lengths must be >= 1");
        }
        strides_[static_cast<std::size_t>(a)] = n;
        const auto side = static_cast<std::size_t>(sides_[a]);
        if (n > std::numeric_limits<std::size_t>::max() / side) {
            throw ArgumentError("grid too large");
        }
        n *= side;
    }
    size_ = n;
}

Site Grid::upper() const
{
    Site u = lower_;
    for (int a = 0; a < dim(); ++a) {
        u[a] += sides_[a] - 1;
    }
    return u;
}

Coord Grid::min_side() const
{
    Coord m = sides_[0];
    for (int a = 1; a < dim(); ++a) {
        m = std::min(m, sides_[a]);
    }
    return m;
}

bool Grid::contains(const Site& x) const
{
    if (x.dim() != dim()) {
        return false;
    }
    if (periodic()) {
        return true;
    }
    for (int a = 0; a < dim(); ++a) {
        const Coord off = x[a] - lower_[a];
        if (off < 0 || off >= sides_[a]) {
            return false;
        }
    }
    return true;
}

Site Grid::wrap(const Site& x) const
{
    require_same_dim(x, sides_);
    if (!periodic()) {
        return x;
    }
    Site w(x.dim());
    for (int a = 0; a < dim(); ++a) {
        w[a] = floor_mod(x[a], sides_[a]);
    }
    return w;
}

std::size_t Grid::index(const Site& x) const
{
    require_same_dim(x, sides_);
    std::size_t idx = 0;
    for (int a = 0; a < dim(); ++a) {
        Coord off = x[a] - lower_[a];
        if (periodic()) {
            off = floor_mod(off, sides_[a]);
        } else if (off < 0 || off >= sides_[a]) {
            throw ArgumentError("site " + to_string(x) + " outside window");
        }
        idx += static_cast<std::size_t>(off) * strides_[static_cast<std::size_t>(a)];
    }
    return idx;
}

Site Grid::site(std::size_t index) const
{
    Site x(dim());
    for (int a = 0; a < dim(); ++a) {
        const std::size_t s = strides_[static_cast<std::size_t>(a)];
        x[a] = lower_[a] + static_cast<Coord>(index / s);
        index %= s;
    }
    return x;
}

std::optional<std::size_t> Grid::step(std::size_t index, int axis) const
{
    const std::size_t s = strides_[static_cast<std::size_t>(axis)];
    const auto side = static_cast<std::size_t>(sides_[axis]);
    const std::size_t coord = (index / s) % side;
    if (coord + 1 < side) {
        return index + s;
    }
    if (periodic()) {
        return index - (side - 1) * s;
    }
    return std::nullopt;
}

Coord Grid::distance(const Site& x, const Site& y) const
{
    return periodic() ? linf_distance(x, y, sides_) : linf_distance(x, y);
}

Coord Grid::boundary_distance(const Site& x) const
{
    if (periodic()) {
        return min_side() / 2;
    }
    Coord best = std::numeric_limits<Coord>::max();
    for (int a = 0; a < dim(); ++a) {
        best = std::min({best, x[a] - lower_[a], lower_[a] + sides_[a] - 1 - x[a]});
    }
    return best;
}

bool Grid::operator==(const Grid& o) const
{
    return kind_ == o.kind_ && lower_ == o.lower_ && sides_ == o.sides_;
}

// ---------------------------------------------------------------------------

std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t t)
{
    return mix64(mix64(seed ^ 0x5851f42d4c957f2dULL) + t);
}

bool draw_site_bit(std::uint64_t rng_seed, double bias, const Site& x)
{
    const std::uint64_t h = prefix_hash(rng_seed, x, x.dim());
    return (h >> 11) < threshold_for(bias);
}

Configuration::Configuration(Grid grid, std::uint64_t rng_seed, double bias, std::vector<std::uint64_t> words)
    : grid_(std::move(grid)), rng_seed_(rng_seed), bias_(bias), words_(std::move(words))
{
    if (words_.size() != (grid_.size() + 63) / 64) {
        throw ArgumentError("bit storage does not match grid size");
    }
}

bool Configuration::bit(const Site& x) const
{
    if (!grid_.contains(x)) {
        throw UndecidableError("site " + to_string(x) + " lies outside the generated region");
    }
    return bit(grid_.index(x));
}

std::size_t Configuration::ones() const
{
    std::size_t n = 0;
    for (auto w : words_) {
        n += static_cast<std::size_t>(std::popcount(w));
    }
    return n;
}

bool Configuration::operator==(const Configuration& o) const
{
    return grid_ == o.grid_ && rng_seed_ == o.rng_seed_ && bias_ == o.bias_ && words_ == o.words_;
}

Configuration generate_configuration(int dim, const Grid& geometry, std::uint64_t rng_seed, double bias)
{
    require_dim(dim);
    if (geometry.dim() != dim) {
        throw ArgumentError("geometry dimension does not match d");
    }
    const std::uint64_t thresh = threshold_for(bias);
    const std::size_t n = geometry.size();
    std::vector<std::uint64_t> words((n + 63) / 64, 0);
    const int last = dim - 1;
    const Coord last_lo = geometry.lower()[last];
    const Coord last_hi = last_lo + geometry.sides()[last];

    parallel_chunks(
        words.size(),
        [&](std::size_t wb, std::size_t we) {
            const std::size_t i0 = wb * 64;
            const std::size_t i1 = std::min(n, we * 64);
            if (i0 >= i1) {
                return;
            }
            Site x = geometry.site(i0);
            std::uint64_t row = prefix_hash(rng_seed, x, last);
            for (std::size_t i = i0; i < i1; ++i) {
                const std::uint64_t h = mix64(row ^ static_cast<std::uint64_t>(x[last]));
                if ((h >> 11) < thresh) {
                    words[i >> 6] |= std::uint64_t{1} << (i & 63);
                }
                if (++x[last] == last_hi) {
                    x[last] = last_lo;
                    for (int a = last - 1; a >= 0; --a) {
                        if (++x[a] < geometry.lower()[a] + geometry.sides()[a]) {
                            break;
                        }
                        x[a] = geometry.lower()[a];
                    }
                    row = prefix_hash(rng_seed, x, last);
                }
            }
        },
        1024);
    return Configuration(geometry, rng_seed, bias, std::move(words));
}

Configuration configuration_from_bits(const Grid& geometry, const std::vector<int>& bits)
{
    if (bits.size() != geometry.size()) {
        throw ArgumentError("bit count does not match geometry size");
    }
    std::vector<std::uint64_t> words((bits.size() + 63) / 64, 0);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] != 0) {
            words[i >> 6] |= std::uint64_t{1} << (i & 63);
        }
    }
    return Configuration(geometry, 0, 0.5, std::move(words));
}

Configuration translate_configuration(const Configuration& c, const Site& z)
{
    const Grid& g = c.grid();
    if (!g.periodic()) {
        throw UnsupportedGeometry("translation requires torus geometry");
    }
    if (z.dim() != g.dim()) {
        throw ArgumentError("shift dimension mismatch");
    }
    std::vector<std::uint64_t> words((g.size() + 63) / 64, 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (c.bit(g.index(g.site(i) - z))) {
            words[i >> 6] |= std::uint64_t{1} << (i & 63);
        }
    }
    return Configuration(g, c.rng_seed(), c.bias(), std::move(words));
}

FieldSampler::FieldSampler(int dim, std::uint64_t rng_seed, double bias) : dim_(dim), seed_(rng_seed), bias_(bias)
{
    require_dim(dim);
    threshold_for(bias);
}

Configuration FieldSampler::window(const Site& corner, const Site& sides) const
{
    return generate_configuration(dim_, Grid::window(corner, sides), seed_, bias_);
}

} // namespace eqm
