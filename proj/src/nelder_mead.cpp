#include "picurve/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "picurve/error.hpp"

namespace picurve {

namespace {

constexpr double kReflect = 1.0;
constexpr double kExpand = 2.0;
constexpr double kContract = 0.5;
constexpr double kShrink = 0.5;

double safe_eval(const Objective& f, std::span<const double> x) {
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

NelderMeadResult nelder_mead(const Objective& objective, std::span<const double> start,
                             const NelderMeadOptions& options) {
    if (options.max_iterations < 1) throw InvalidParameters("max_iterations must be >= 1");
    if (!(options.tolerance > 0.0)) throw InvalidParameters("tolerance must be > 0");
    const std::size_t dim = start.size();
    if (dim == 0) throw InvalidParameters("cannot minimize over zero parameters");

    const double f_start = objective(start);
    if (!std::isfinite(f_start)) throw InvalidParameters("objective is not finite at the start");

    std::vector<std::vector<double>> simplex(dim + 1, std::vector<double>(start.begin(), start.end()));
    std::vector<double> values(dim + 1);
    values[0] = f_start;
    for (std::size_t i = 0; i < dim; ++i) {
        simplex[i + 1][i] += options.step_scale * std::max(std::abs(start[i]), 1.0);
        values[i + 1] = safe_eval(objective, simplex[i + 1]);
    }

    std::vector<std::size_t> order(dim + 1);
    std::vector<double> centroid(dim), trial(dim), trial2(dim);

    NelderMeadResult result;
    int iteration = 0;
    for (;;) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[dim - 1];
        result.best_trace.push_back(values[best]);

        const double spread = values[worst] - values[best];
        bool straddles = false;
        if (spread < options.tolerance) {
            // Equal vertex values can bracket a lower interior point.
            std::fill(trial.begin(), trial.end(), 0.0);
            for (const auto& v : simplex) {
                for (std::size_t j = 0; j < dim; ++j) trial[j] += v[j];
            }
            for (double& c : trial) c /= static_cast<double>(dim + 1);
            const double f_mid = safe_eval(objective, trial);
            straddles = f_mid < values[best] - options.tolerance;
            if (!straddles) {
                result.converged = true;
                break;
            }
        }
        if (iteration >= options.max_iterations) break;
        ++iteration;
        if (straddles) {
            simplex[worst] = trial;
            values[worst] = safe_eval(objective, trial);
            continue;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t k = 0; k < dim; ++k) {
            const auto& v = simplex[order[k]];
            for (std::size_t j = 0; j < dim; ++j) centroid[j] += v[j];
        }
        for (double& c : centroid) c /= static_cast<double>(dim);

        const auto& xw = simplex[worst];
        for (std::size_t j = 0; j < dim; ++j) {
            trial[j] = centroid[j] + kReflect * (centroid[j] - xw[j]);
        }
        const double f_reflect = safe_eval(objective, trial);

        if (f_reflect < values[best]) {
            for (std::size_t j = 0; j < dim; ++j) {
                trial2[j] = centroid[j] + kExpand * (centroid[j] - xw[j]);
            }
            const double f_expand = safe_eval(objective, trial2);
            if (f_expand < f_reflect) {
                simplex[worst] = trial2;
                values[worst] = f_expand;
            } else {
                simplex[worst] = trial;
                values[worst] = f_reflect;
            }
            continue;
        }
        if (f_reflect < values[second_worst]) {
            simplex[worst] = trial;
            values[worst] = f_reflect;
            continue;
        }

        bool accepted = false;
        if (f_reflect < values[worst]) {
            // Outside contraction.
            for (std::size_t j = 0; j < dim; ++j) {
                trial2[j] = centroid[j] + kContract * (trial[j] - centroid[j]);
            }
            const double f_contract = safe_eval(objective, trial2);
            if (f_contract <= f_reflect) {
                simplex[worst] = trial2;
                values[worst] = f_contract;
                accepted = true;
            }
        } else {
            // Inside contraction.
            for (std::size_t j = 0; j < dim; ++j) {
                trial2[j] = centroid[j] + kContract * (xw[j] - centroid[j]);
            }
            const double f_contract = safe_eval(objective, trial2);
            if (f_contract < values[worst]) {
                simplex[worst] = trial2;
                values[worst] = f_contract;
                accepted = true;
            }
        }
        if (accepted) continue;

        const auto x_best = simplex[best];
        for (std::size_t k = 0; k <= dim; ++k) {
            if (k == best) continue;
            for (std::size_t j = 0; j < dim; ++j) {
                simplex[k][j] = x_best[j] + kShrink * (simplex[k][j] - x_best[j]);
            }
            values[k] = safe_eval(objective, simplex[k]);
        }
    }

    const std::size_t best = order.front();
    result.argmin = simplex[best];
    result.value = values[best];
    result.iterations = iteration;
    return result;
}

}  // namespace picurve
