#include <cmath>
#include <numbers>
#include <string>

#include "picurve/error.hpp"
#include "picurve/fit.hpp"

namespace picurve {

std::string_view to_string(Criterion c) {
    return c == Criterion::mse ? "mse" : "mle";
}

Criterion parse_criterion(std::string_view name) {
    if (name == "mse" || name == "MSE") return Criterion::mse;
    if (name == "mle" || name == "MLE") return Criterion::mle;
    throw InvalidParameters("unknown criterion '" + std::string(name) + "' (expected mse or mle)");
}

double sum_squared_residuals(ModelId id, const ParameterVector& params, const Dataset& data) {
    if (data.irradiance.size() != data.rate.size()) {
        throw DataError("dataset '" + data.id + "' has mismatched column lengths");
    }
    const auto predicted = evaluate_grid(id, params, data.irradiance);
    double sse = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double r = data.rate[i] - predicted[i];
        sse += r * r;
    }
    return sse;
}

double mse_objective(ModelId id, const ParameterVector& params, const Dataset& data) {
    if (data.size() == 0) throw DataError("dataset '" + data.id + "' is empty");
    return sum_squared_residuals(id, params, data) / static_cast<double>(data.size());
}

NllValue profiled_nll(double sse, std::size_t n) {
    if (n == 0) throw DataError("cannot evaluate a likelihood on zero observations");
    const double dn = static_cast<double>(n);
    double sigma2 = sse / dn;
    NllValue out;
    if (!(sigma2 >= kSigma2Floor)) {
        sigma2 = kSigma2Floor;
        out.floored = true;
    }
    out.value = 0.5 * dn * (std::log(2.0 * std::numbers::pi * sigma2) + 1.0);
    return out;
}

NllValue nll_objective(ModelId id, const ParameterVector& params, const Dataset& data) {
    return profiled_nll(sum_squared_residuals(id, params, data), data.size());
}

}  // namespace picurve
