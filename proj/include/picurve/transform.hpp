#pragma once

// Bijections between natural (constrained) parameters and the unconstrained
// vector the simplex works on.
//
//   positive        z = log(x)
//   theta, theta_b  z = logit(x)                on (0, 1)
//   gamma           z = logit((x - 1) / 9)      on (1, 10)
//   b               z = log(b - 1)
//   R               z = log(R + 1e-12)
//
// A bounds override replaces the default with a scaled logit on (lower, upper),
// or log(x - lower) when upper is +inf.

#include <map>
#include <span>
#include <vector>

#include "picurve/models.hpp"

namespace picurve {

inline constexpr double kRespirationShift = 1e-12;
inline constexpr double kGammaLower = 1.0;
inline constexpr double kGammaUpper = 10.0;

struct Bounds {
    double lower;
    double upper;

    friend bool operator==(const Bounds&, const Bounds&) = default;
};
using BoundsMap = std::map<Param, Bounds>;

/// Throws InvalidParameters when an interval is empty or leaves the parameter's domain.
void check_bounds(const BoundsMap& bounds);

double to_unconstrained(Param p, double natural, const BoundsMap& bounds = {});
double to_natural(Param p, double unconstrained, const BoundsMap& bounds = {});

/// d natural / d unconstrained, evaluated at the unconstrained point.
double natural_derivative(Param p, double unconstrained, const BoundsMap& bounds = {});

/// Throws InvalidParameters for values outside the transform domain.
std::vector<double> transform(const ParameterVector& natural, const BoundsMap& bounds = {});
ParameterVector untransform(ModelId id, std::span<const double> z, bool with_respiration,
                            const BoundsMap& bounds = {});

}  // namespace picurve
