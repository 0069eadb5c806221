#include "eqm/events.hpp"

#include <cmath>

#include "eqm/errors.hpp"

namespace eqm {

int K_of_r(double r, int d)
{
    if (!(r > radius_r(2, d))) {
        throw RangeError("K(r) needs r > r_2");
    }
    int K = 0;
    while (!(radius_r(K + 1, d) < r && r <= radius_r(K + 2, d))) {
        ++K;
    }
    return K;
}

TheoryParams theory_params(int d)
{
    if (d < 1) {
        throw ArgumentError("dimension must be >= 1");
    }
    TheoryParams p;
    p.d = d;
    p.alpha = 1.0 / (1.0 + d / 4.0);
    p.beta = d * p.alpha / 2.0;
    p.beta_prelim = 1.0 / (1.0 + 2.0 / d);
    p.log_power = 4;
    return p;
}

double bound_exponent(int d, BoundVariant variant)
{
    const TheoryParams p = theory_params(d);
    switch (variant) {
    case BoundVariant::Main:
        return p.beta;
    case BoundVariant::Preliminary:
        return p.beta_prelim;
    case BoundVariant::Ceiling:
        return d / 2.0;
    }
    return p.beta;
}

double theoretical_bound(double r, int d, double c, BoundVariant variant)
{
    const double e = bound_exponent(d, variant);
    const double lr = std::log(r);
    switch (variant) {
    case BoundVariant::Main:
        return c * std::pow(lr, theory_params(d).log_power) * std::pow(r, -e);
    case BoundVariant::Preliminary:
        return c * lr * lr * std::pow(r, -e);
    case BoundVariant::Ceiling:
        return c * std::pow(r, -e);
    }
    return 0.0;
}

} // namespace eqm
