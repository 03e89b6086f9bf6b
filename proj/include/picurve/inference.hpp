#pragma once

// Post-fit diagnostics: observed information, covariance, Wald intervals,
// information criteria, R² and delta-method confidence bands.
//
// All curvature work happens in the optimizer's unconstrained space; intervals
// are mapped back through the parameter transforms, so they are asymmetric in
// natural units and never cross a positivity bound.

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "picurve/dataset.hpp"
#include "picurve/fit.hpp"
#include "picurve/nelder_mead.hpp"

namespace picurve {

inline constexpr double kPseudoInverseCondition = 1e12;

struct InfoMatrix {
    Eigen::MatrixXd matrix;  // transformed-parameter space
    double condition_number = 0.0;
    bool pseudo_inverted = false;
};

struct Covariance {
    Eigen::MatrixXd matrix;
    double condition_number = 0.0;
    bool pseudo_inverted = false;
};

struct ParameterInterval {
    Param param;
    double estimate = 0.0;
    double std_error = 0.0;  // natural units, delta method
    double lower = 0.0;
    double upper = 0.0;
};

struct IntervalSet {
    double level = 0.95;
    std::vector<ParameterInterval> parameters;
};

struct CriteriaSet {
    double aic = 0.0;
    double aicc = 0.0;
    double bic = 0.0;
    std::size_t n = 0;
    std::size_t k_ic = 0;     // free parameters + 1 for sigma
    bool aicc_undefined = false;  // n <= k_ic + 1, aicc reported as +inf
    bool sigma2_floored = false;
};

struct RSquared {
    double r2 = 0.0;
    double adjusted = 0.0;
};

struct PredictionBand {
    std::vector<double> grid;
    std::vector<double> fit;
    std::vector<double> lower;
    std::vector<double> upper;
    double level = 0.95;
};

/// Quantile of the standard normal distribution.
double normal_quantile(double p);

/// Finite-difference step used for Hessians and gradients: eps^(1/3) max(|x|, 1).
double fd_step(double x);

/// Central finite-difference Hessian of `f` at `x`, symmetrized.
Eigen::MatrixXd numerical_hessian(const Objective& f, std::span<const double> x);

/// Observed information: Hessian of the profiled Gaussian NLL at the optimum.
InfoMatrix info_matrix(const FitResult& fit, const Dataset& data);

/// Inverse of the information; Moore-Penrose pseudo-inverse (flagged) when the
/// condition number exceeds kPseudoInverseCondition.
Covariance covariance(const InfoMatrix& info);
Covariance covariance(const Eigen::MatrixXd& info);

IntervalSet conf_intervals(const FitResult& fit, const Covariance& cov, double level = 0.95);

/// Re-evaluates the intervals at another level from the stored covariance.
IntervalSet recalc_ci(const FitResult& fit, const Covariance& cov, double new_level);

/// AIC/AICc/BIC from the profiled Gaussian likelihood with sigma counted.
CriteriaSet criteria_from(double sse, std::size_t n, std::size_t k_ic);
CriteriaSet information_criteria(const FitResult& fit);

RSquared r_squared(const FitResult& fit, const Dataset& data);
RSquared r_squared(std::span<const double> observed, std::span<const double> predicted,
                   std::size_t k);

/// Mean-response confidence band from the delta method.
PredictionBand prediction_band(const FitResult& fit, const Covariance& cov,
                               std::span<const double> grid, double level = 0.95,
                               int threads = 0);

namespace serial {
PredictionBand prediction_band(const FitResult& fit, const Covariance& cov,
                               std::span<const double> grid, double level = 0.95);
}  // namespace serial

}  // namespace picurve
