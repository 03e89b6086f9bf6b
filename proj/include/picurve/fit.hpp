#pragma once

// Objective functions, data-informed starting values and the multi-start
// simplex driver behind fit_model / fit_all.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "picurve/dataset.hpp"
#include "picurve/models.hpp"
#include "picurve/transform.hpp"

namespace picurve {

enum class Criterion : std::uint8_t { mse, mle };

std::string_view to_string(Criterion c);
Criterion parse_criterion(std::string_view name);

struct FitOptions {
    Criterion criterion = Criterion::mse;
    bool respiration = false;
    int max_iterations = 2000;
    double tolerance = 1e-10;
    int restarts = 3;
    std::uint64_t seed = 20240101;
    BoundsMap bounds_overrides;
    /// Extra start for Ph models taken from the fitted no-inhibition partner.
    bool nested_start = true;
    /// Threads for fit_all; 0 keeps the OpenMP default.
    int threads = 0;
};

/// Floor applied to sigma^2 = SSE / n before taking its logarithm.
inline constexpr double kSigma2Floor = 1e-30;

struct NllValue {
    double value = 0.0;
    bool floored = false;
};

struct FitResult {
    ModelId model = ModelId::lm;
    std::string dataset_id;
    Criterion criterion = Criterion::mse;
    ParameterVector params;
    BoundsMap bounds;
    double objective_value = 0.0;
    double sse = 0.0;
    double sigma2_hat = 0.0;
    bool sigma2_floored = false;
    bool converged = false;
    int iterations = 0;
    std::size_t n = 0;
    /// Free parameters including R, plus one for sigma under MLE.
    std::size_t k = 0;
    /// Model parameters including R (sigma excluded).
    std::size_t n_free = 0;
    double r2 = 0.0;
    double adj_r2 = 0.0;
    std::optional<DerivedQuantities> derived;
    std::string derived_error;
    /// Set when the fit could not be produced at all (fit_all keeps going).
    std::optional<std::string> failure;

    bool ok() const noexcept { return !failure.has_value(); }

    friend bool operator==(const FitResult&, const FitResult&) = default;
};

double sum_squared_residuals(ModelId id, const ParameterVector& params, const Dataset& data);

/// (1/n) sum (P_obs - P_model)^2.
double mse_objective(ModelId id, const ParameterVector& params, const Dataset& data);

/// Gaussian negative log-likelihood with sigma^2 profiled out:
/// (n/2) [ln(2 pi SSE/n) + 1], with SSE/n floored at kSigma2Floor.
NllValue nll_objective(ModelId id, const ParameterVector& params, const Dataset& data);
NllValue profiled_nll(double sse, std::size_t n);

/// Deterministic starting values built from the low-light slope, the
/// maximum rate and the slope past the maximum.
ParameterVector suggest_start(ModelId id, const Dataset& data, bool respiration);

FitResult fit_model(const Dataset& data, ModelId id, const FitOptions& options = {});

/// Same as fit_model, reusing an already fitted no-inhibition partner for the
/// nested start instead of refitting it. `partner` must come from the same
/// dataset and options.
FitResult fit_model(const Dataset& data, ModelId id, const FitOptions& options,
                    const FitResult& partner);

/// Fits all 24 models with identical options and sorts them by descending R²
/// (ties: ascending k, then model order). Failed fits are kept with
/// `failure` set and sorted last. Throws only if every model fails.
std::vector<FitResult> fit_all(const Dataset& data, const FitOptions& options = {});

/// Orders results as fit_all does.
void sort_by_r2(std::vector<FitResult>& fits);

namespace serial {
std::vector<FitResult> fit_all(const Dataset& data, const FitOptions& options = {});
}  // namespace serial

}  // namespace picurve
