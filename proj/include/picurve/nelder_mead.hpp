#pragma once

#include <functional>
#include <span>
#include <vector>

namespace picurve {

struct NelderMeadOptions {
    int max_iterations = 2000;
    /// Converged once max - min objective over the vertices drops below this.
    double tolerance = 1e-10;
    /// Initial simplex step per coordinate: step_scale * max(|x_i|, 1).
    double step_scale = 0.05;
};

struct NelderMeadResult {
    std::vector<double> argmin;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
    /// Best vertex value after each iteration (index 0 is the initial simplex).
    std::vector<double> best_trace;
};

using Objective = std::function<double(std::span<const double>)>;

/// Unconstrained simplex minimizer: reflection 1, expansion 2, contraction
/// 0.5, shrink 0.5. Non-finite objective values are treated as +inf, but the
/// start itself must evaluate to a finite value (InvalidParameters otherwise).
NelderMeadResult nelder_mead(const Objective& objective, std::span<const double> start,
                             const NelderMeadOptions& options = {});

}  // namespace picurve
