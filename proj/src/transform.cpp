#include "picurve/transform.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "picurve/error.hpp"

namespace picurve {

namespace {

double logistic(double z) {
    // Split by sign so neither branch overflows.
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double logit(double u) {
    return std::log(u) - std::log1p(-u);
}

[[noreturn]] void out_of_domain(Param p, double v) {
    throw InvalidParameters(std::string(to_string(p)) + " = " + std::to_string(v) +
                            " is outside the transform domain");
}

const Bounds* find_bounds(Param p, const BoundsMap& bounds) {
    const auto it = bounds.find(p);
    return it == bounds.end() ? nullptr : &it->second;
}

double bounded_to_unconstrained(Param p, double x, const Bounds& b) {
    if (!(x > b.lower && x < b.upper)) out_of_domain(p, x);
    if (std::isinf(b.upper)) return std::log(x - b.lower);
    return logit((x - b.lower) / (b.upper - b.lower));
}

double bounded_to_natural(double z, const Bounds& b) {
    if (std::isinf(b.upper)) return b.lower + std::exp(z);
    return b.lower + (b.upper - b.lower) * logistic(z);
}

}  // namespace

void check_bounds(const BoundsMap& bounds) {
    for (const auto& [p, b] : bounds) {
        const std::string name(to_string(p));
        if (!(b.lower < b.upper) || std::isnan(b.lower) || std::isinf(b.lower)) {
            throw InvalidParameters("bounds for " + name + " must satisfy lower < upper");
        }
        double floor = 0.0;
        double ceiling = std::numeric_limits<double>::infinity();
        switch (domain_of(p)) {
            case Domain::unit_open:
            case Domain::unit_half: ceiling = 1.0; break;
            case Domain::b_shape: floor = 1.0; break;
            default: break;
        }
        if (b.lower < floor || b.upper > ceiling) {
            throw InvalidParameters("bounds for " + name + " leave the parameter's domain");
        }
    }
}

double to_unconstrained(Param p, double x, const BoundsMap& bounds) {
    if (!std::isfinite(x)) out_of_domain(p, x);
    if (const Bounds* b = find_bounds(p, bounds)) return bounded_to_unconstrained(p, x, *b);
    switch (p) {
        case Param::theta:
        case Param::theta_beta:
            if (!(x > 0.0 && x < 1.0)) out_of_domain(p, x);
            return logit(x);
        case Param::gamma:
            if (!(x > kGammaLower && x < kGammaUpper)) out_of_domain(p, x);
            return logit((x - kGammaLower) / (kGammaUpper - kGammaLower));
        case Param::b:
            if (!(x > 1.0)) out_of_domain(p, x);
            return std::log(x - 1.0);
        case Param::respiration:
            if (!(x >= 0.0)) out_of_domain(p, x);
            return std::log(x + kRespirationShift);
        default:
            if (!(x > 0.0)) out_of_domain(p, x);
            return std::log(x);
    }
}

double to_natural(Param p, double z, const BoundsMap& bounds) {
    if (const Bounds* b = find_bounds(p, bounds)) return bounded_to_natural(z, *b);
    switch (p) {
        case Param::theta:
        case Param::theta_beta: return logistic(z);
        case Param::gamma: return kGammaLower + (kGammaUpper - kGammaLower) * logistic(z);
        case Param::b: return 1.0 + std::exp(z);
        case Param::respiration: return std::max(0.0, std::exp(z) - kRespirationShift);
        default: return std::exp(z);
    }
}

double natural_derivative(Param p, double z, const BoundsMap& bounds) {
    if (const Bounds* b = find_bounds(p, bounds)) {
        if (std::isinf(b->upper)) return std::exp(z);
        const double s = logistic(z);
        return (b->upper - b->lower) * s * (1.0 - s);
    }
    switch (p) {
        case Param::theta:
        case Param::theta_beta: {
            const double s = logistic(z);
            return s * (1.0 - s);
        }
        case Param::gamma: {
            const double s = logistic(z);
            return (kGammaUpper - kGammaLower) * s * (1.0 - s);
        }
        default: return std::exp(z);
    }
}

std::vector<double> transform(const ParameterVector& natural, const BoundsMap& bounds) {
    const auto names = natural.names();
    const auto values = natural.values();
    std::vector<double> z(values.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = to_unconstrained(names[i], values[i], bounds);
    return z;
}

ParameterVector untransform(ModelId id, std::span<const double> z, bool with_respiration,
                            const BoundsMap& bounds) {
    std::vector<Param> names = model_spec(id).parameters;
    if (with_respiration) names.push_back(Param::respiration);
    if (names.size() != z.size()) {
        throw InvalidParameters("unconstrained vector has " + std::to_string(z.size()) +
                                " entries, " + std::string(to_string(id)) + " needs " +
                                std::to_string(names.size()));
    }
    std::vector<double> x(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) x[i] = to_natural(names[i], z[i], bounds);
    return ParameterVector(id, std::move(x), with_respiration);
}

}  // namespace picurve
