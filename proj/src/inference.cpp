#include "picurve/inference.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <limits>
#include <string>

#include "picurve/error.hpp"
#include "picurve/parallel.hpp"
#include "picurve/transform.hpp"

namespace picurve {

namespace {

void check_level(double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw InvalidParameters("confidence level must lie in (0, 1), got " + std::to_string(level));
    }
}

std::vector<Param> fit_names(const FitResult& fit) {
    return fit.params.names();
}

// Net model output at irradiance I for an unconstrained parameter vector.
double model_at(const FitResult& fit, std::span<const double> z, const std::vector<Param>& names,
                double irradiance) {
    const std::size_t roster = model_spec(fit.model).parameters.size();
    double natural[8];
    for (std::size_t i = 0; i < z.size(); ++i) natural[i] = to_natural(names[i], z[i], fit.bounds);
    const double r = fit.params.has_respiration() ? natural[z.size() - 1] : 0.0;
    return gross_rate_unchecked(fit.model, std::span<const double>(natural, roster), irradiance) - r;
}

void require_fit(const FitResult& fit) {
    if (!fit.ok()) throw InferenceError("fit for " + std::string(to_string(fit.model)) + " failed");
}

PredictionBand band_impl(const FitResult& fit, const Covariance& cov,
                         std::span<const double> grid, double level, int threads) {
    require_fit(fit);
    check_level(level);
    const auto z = transform(fit.params, fit.bounds);
    const auto names = fit_names(fit);
    const std::size_t k = z.size();
    if (cov.matrix.rows() != static_cast<Eigen::Index>(k) ||
        cov.matrix.cols() != static_cast<Eigen::Index>(k)) {
        throw InferenceError("covariance dimensions do not match the fitted parameters");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i]) || grid[i] < 0.0) {
            throw DataError("band grid point " + std::to_string(i) + " is not a nonnegative number");
        }
        if (i > 0 && grid[i] < grid[i - 1]) throw DataError("band grid must be sorted");
    }

    const double zq = normal_quantile(0.5 * (1.0 + level));
    PredictionBand band;
    band.level = level;
    band.grid.assign(grid.begin(), grid.end());
    band.fit = evaluate_grid(fit.model, fit.params, grid);
    band.lower.resize(grid.size());
    band.upper.resize(grid.size());

    std::vector<double> steps(k);
    for (std::size_t j = 0; j < k; ++j) steps[j] = fd_step(z[j]);

    const auto count = static_cast<std::ptrdiff_t>(grid.size());
    std::vector<double> variance(grid.size());
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        Eigen::VectorXd g(static_cast<Eigen::Index>(k));
        std::vector<double> probe = z;
        for (std::size_t j = 0; j < k; ++j) {
            probe[j] = z[j] + steps[j];
            const double up = model_at(fit, probe, names, grid[i]);
            probe[j] = z[j] - steps[j];
            const double down = model_at(fit, probe, names, grid[i]);
            probe[j] = z[j];
            g[static_cast<Eigen::Index>(j)] = (up - down) / (2.0 * steps[j]);
        }
        variance[i] = g.dot(cov.matrix * g);
    }

    for (std::size_t i = 0; i < grid.size(); ++i) {
        double v = variance[i];
        if (!std::isfinite(v)) {
            throw InferenceError("band variance is not finite at grid index " + std::to_string(i));
        }
        if (v < 0.0) {
            if (v < -1e-12) {
                throw InferenceError("negative band variance " + std::to_string(v) +
                                     " at grid index " + std::to_string(i));
            }
            v = 0.0;
        }
        const double half = zq * std::sqrt(v);
        band.lower[i] = band.fit[i] - half;
        band.upper[i] = band.fit[i] + half;
    }
    return band;
}

}  // namespace

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidParameters("quantile probability must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double fd_step(double x) {
    static const double cbrt_eps = std::cbrt(std::numeric_limits<double>::epsilon());
    return cbrt_eps * std::max(std::abs(x), 1.0);
}

Eigen::MatrixXd numerical_hessian(const Objective& f, std::span<const double> x) {
    const std::size_t k = x.size();
    std::vector<double> p(x.begin(), x.end());
    std::vector<double> h(k);
    for (std::size_t i = 0; i < k; ++i) h[i] = fd_step(x[i]);
    const double f0 = f(p);

    Eigen::MatrixXd H(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        p[i] = x[i] + h[i];
        const double fp = f(p);
        p[i] = x[i] - h[i];
        const double fm = f(p);
        p[i] = x[i];
        H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for (std::size_t j = 0; j < i; ++j) {
            auto at = [&](double si, double sj) {
                p[i] = x[i] + si * h[i];
                p[j] = x[j] + sj * h[j];
                const double v = f(p);
                p[i] = x[i];
                p[j] = x[j];
                return v;
            };
            const double v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h[i] * h[j]);
            H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            H(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    }
    return 0.5 * (H + H.transpose());
}

InfoMatrix info_matrix(const FitResult& fit, const Dataset& data) {
    require_fit(fit);
    if (!fit.converged) {
        throw InferenceError("information matrix needs a converged fit (" +
                             std::string(to_string(fit.model)) + " did not converge)");
    }
    const auto z = transform(fit.params, fit.bounds);
    const auto names = fit_names(fit);
    const Objective nll = [&](std::span<const double> v) {
        double sse = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double r = data.rate[i] - model_at(fit, v, names, data.irradiance[i]);
            sse += r * r;
        }
        if (std::isnan(sse)) return std::numeric_limits<double>::quiet_NaN();
        return profiled_nll(sse, data.size()).value;
    };

    InfoMatrix info;
    info.matrix = numerical_hessian(nll, z);
    for (Eigen::Index i = 0; i < info.matrix.rows(); ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            if (!std::isfinite(info.matrix(i, j))) {
                throw InferenceError("information matrix entry (" + std::string(to_string(names[i])) +
                                     ", " + std::string(to_string(names[j])) + ") is not finite");
            }
        }
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info.matrix);
    const auto abs_ev = eig.eigenvalues().cwiseAbs();
    info.condition_number = abs_ev.minCoeff() > 0.0 ? abs_ev.maxCoeff() / abs_ev.minCoeff()
                                                    : std::numeric_limits<double>::infinity();
    info.pseudo_inverted = info.condition_number > kPseudoInverseCondition;
    return info;
}

Covariance covariance(const Eigen::MatrixXd& info) {
    if (!info.allFinite()) throw InferenceError("information matrix is not finite");
    const Eigen::MatrixXd sym = 0.5 * (info + info.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    const Eigen::VectorXd ev = eig.eigenvalues();
    const double max_abs = ev.cwiseAbs().maxCoeff();
    const double min_abs = ev.cwiseAbs().minCoeff();

    Covariance cov;
    cov.condition_number = min_abs > 0.0 ? max_abs / min_abs : std::numeric_limits<double>::infinity();
    cov.pseudo_inverted = cov.condition_number > kPseudoInverseCondition;

    Eigen::VectorXd inv(ev.size());
    const double cutoff = max_abs / kPseudoInverseCondition;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (cov.pseudo_inverted && std::abs(ev[i]) <= cutoff) inv[i] = 0.0;
        else inv[i] = 1.0 / ev[i];
    }
    const auto& V = eig.eigenvectors();
    cov.matrix = V * inv.asDiagonal() * V.transpose();
    cov.matrix = 0.5 * (cov.matrix + cov.matrix.transpose());
    return cov;
}

Covariance covariance(const InfoMatrix& info) {
    return covariance(info.matrix);
}

IntervalSet conf_intervals(const FitResult& fit, const Covariance& cov, double level) {
    require_fit(fit);
    check_level(level);
    const auto z = transform(fit.params, fit.bounds);
    const auto names = fit_names(fit);
    if (cov.matrix.rows() != static_cast<Eigen::Index>(z.size())) {
        throw InferenceError("covariance dimensions do not match the fitted parameters");
    }
    const double zq = normal_quantile(0.5 * (1.0 + level));

    IntervalSet out;
    out.level = level;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double var = cov.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
        if (!(var >= 0.0)) {
            throw InferenceError("covariance diagonal " + std::to_string(i) + " (" +
                                 std::string(to_string(names[i])) + ") is negative");
        }
        const double se_z = std::sqrt(var);
        ParameterInterval pi;
        pi.param = names[i];
        pi.estimate = fit.params.values()[i];
        pi.std_error = se_z * std::abs(natural_derivative(names[i], z[i], fit.bounds));
        if (se_z == 0.0) {
            pi.lower = pi.upper = pi.estimate;
        } else {
            pi.lower = std::min(pi.estimate, to_natural(names[i], z[i] - zq * se_z, fit.bounds));
            pi.upper = std::max(pi.estimate, to_natural(names[i], z[i] + zq * se_z, fit.bounds));
        }
        out.parameters.push_back(pi);
    }
    return out;
}

IntervalSet recalc_ci(const FitResult& fit, const Covariance& cov, double new_level) {
    return conf_intervals(fit, cov, new_level);
}

CriteriaSet criteria_from(double sse, std::size_t n, std::size_t k_ic) {
    const NllValue nll = profiled_nll(sse, n);
    const double dn = static_cast<double>(n);
    const double dk = static_cast<double>(k_ic);
    CriteriaSet c;
    c.n = n;
    c.k_ic = k_ic;
    c.sigma2_floored = nll.floored;
    c.aic = 2.0 * dk + 2.0 * nll.value;
    c.bic = dk * std::log(dn) + 2.0 * nll.value;
    if (dn - dk - 1.0 > 0.0) {
        c.aicc = c.aic + 2.0 * dk * (dk + 1.0) / (dn - dk - 1.0);
    } else {
        c.aicc = std::numeric_limits<double>::infinity();
        c.aicc_undefined = true;
    }
    return c;
}

CriteriaSet information_criteria(const FitResult& fit) {
    require_fit(fit);
    return criteria_from(fit.sse, fit.n, fit.n_free + 1);
}

RSquared r_squared(std::span<const double> observed, std::span<const double> predicted,
                   std::size_t k) {
    if (observed.size() != predicted.size() || observed.empty()) {
        throw DataError("observed and predicted lengths differ or are empty");
    }
    double mean = 0.0;
    for (double p : observed) mean += p;
    mean /= static_cast<double>(observed.size());
    double sst = 0.0, sse = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        sst += (observed[i] - mean) * (observed[i] - mean);
        sse += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
    }
    if (!(sst > 0.0)) throw DataError("constant response: total sum of squares is zero");
    const double n = static_cast<double>(observed.size());
    const double dk = static_cast<double>(k);
    RSquared out;
    out.r2 = 1.0 - sse / sst;
    out.adjusted = n - dk - 1.0 > 0.0 ? 1.0 - (1.0 - out.r2) * (n - 1.0) / (n - dk - 1.0)
                                      : std::numeric_limits<double>::quiet_NaN();
    return out;
}

RSquared r_squared(const FitResult& fit, const Dataset& data) {
    require_fit(fit);
    const auto predicted = evaluate_grid(fit.model, fit.params, data.irradiance);
    return r_squared(data.rate, predicted, fit.n_free);
}

PredictionBand prediction_band(const FitResult& fit, const Covariance& cov,
                               std::span<const double> grid, double level, int threads) {
    return band_impl(fit, cov, grid, level, resolve_threads(threads));
}

namespace serial {
PredictionBand prediction_band(const FitResult& fit, const Covariance& cov,
                               std::span<const double> grid, double level) {
    return band_impl(fit, cov, grid, level, 1);
}
}  // namespace serial

}  // namespace picurve
