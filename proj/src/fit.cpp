#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "picurve/error.hpp"
#include "picurve/fit.hpp"
#include "picurve/nelder_mead.hpp"
#include "picurve/parallel.hpp"

namespace picurve {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxPolishRounds = 8;
/// Inhibition scale used when seeding a Ph fit from its partner, relative to max(I).
constexpr double kNestedScale = 1e12;
/// Extra starts for the inhibition scale, relative to max(I).
constexpr double kInhibitionStartFactors[] = {0.5, 1.0, 2.0};

// Objective over the unconstrained vector for one (dataset, model, options).
class FitProblem {
public:
    FitProblem(const Dataset& data, ModelId id, const FitOptions& options)
        : data_(data), id_(id), options_(options) {
        names_ = model_spec(id).parameters;
        roster_size_ = names_.size();
        if (options.respiration) names_.push_back(Param::respiration);
        natural_.resize(names_.size());
    }

    std::size_t dimension() const { return names_.size(); }

    double sse(std::span<const double> z) {
        for (std::size_t i = 0; i < z.size(); ++i) {
            natural_[i] = to_natural(names_[i], z[i], options_.bounds_overrides);
        }
        const double r = options_.respiration ? natural_.back() : 0.0;
        const std::span<const double> p(natural_.data(), roster_size_);
        double sum = 0.0;
        for (std::size_t i = 0; i < data_.size(); ++i) {
            const double resid = data_.rate[i] - (gross_rate_unchecked(id_, p, data_.irradiance[i]) - r);
            sum += resid * resid;
        }
        return std::isfinite(sum) ? sum : kInf;
    }

    double operator()(std::span<const double> z) {
        const double s = sse(z);
        if (!std::isfinite(s)) return kInf;
        if (options_.criterion == Criterion::mse) return s / static_cast<double>(data_.size());
        return profiled_nll(s, data_.size()).value;
    }

private:
    const Dataset& data_;
    ModelId id_;
    const FitOptions& options_;
    std::vector<Param> names_;
    std::size_t roster_size_ = 0;
    std::vector<double> natural_;
};

// Uniform on [-0.5, 0.5) from the top 53 bits, identical on every standard library.
double jitter(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
}

// Pull a start strictly inside any overridden interval.
void clamp_into_bounds(ParameterVector& start, const BoundsMap& bounds) {
    for (const auto& [p, b] : bounds) {
        if (!start.contains(p)) continue;
        const double v = start.get(p);
        if (v > b.lower && v < b.upper) continue;
        const double width = std::isinf(b.upper) ? std::max(1.0, std::abs(b.lower)) : b.upper - b.lower;
        const double inside = std::isinf(b.upper) ? b.lower + 0.5 * width
                                                  : (v <= b.lower ? b.lower + 0.01 * width
                                                                  : b.upper - 0.01 * width);
        start.set(p, inside);
    }
}

std::optional<std::vector<double>> nested_start_from(const FitResult& partner,
                                                     const ParameterVector& heuristic,
                                                     const Dataset& data,
                                                     const FitOptions& options) {
    if (!partner.ok()) return std::nullopt;
    ParameterVector start = heuristic;
    const auto& lp = partner.params;
    const Param level = start.contains(Param::p_s) ? Param::p_s : Param::p_max;
    const Param slope = start.contains(Param::i_alpha_s) ? Param::i_alpha_s : Param::i_alpha;
    start.set(level, lp.get(Param::p_max));
    start.set(slope, lp.get(Param::i_alpha));
    if (lp.contains(Param::theta) && start.contains(Param::theta)) {
        start.set(Param::theta, lp.get(Param::theta));
    }
    if (lp.has_respiration() && start.has_respiration()) {
        start.set(Param::respiration, *lp.respiration());
    }
    if (const auto scale = inhibition_scale_param(start.model())) {
        start.set(*scale, kNestedScale * data.max_irradiance());
    }
    clamp_into_bounds(start, options.bounds_overrides);
    try {
        return transform(start, options.bounds_overrides);
    } catch (const InvalidParameters&) {
        return std::nullopt;
    }
}

double total_sum_squares(const Dataset& data) {
    double mean = 0.0;
    for (double p : data.rate) mean += p;
    mean /= static_cast<double>(data.size());
    double sst = 0.0;
    for (double p : data.rate) sst += (p - mean) * (p - mean);
    return sst;
}

FitResult fit_impl(const Dataset& data, ModelId id, const FitOptions& options,
                   const FitResult* partner) {
    const auto& spec = model_spec(id);
    const std::size_t n_free = spec.parameters.size() + (options.respiration ? 1 : 0);
    if (data.size() <= n_free) {
        throw UnderdeterminedError("model " + spec.name + " has " + std::to_string(n_free) +
                                   " free parameters but dataset '" + data.id + "' has only " +
                                   std::to_string(data.size()) + " observations");
    }
    validate_dataset(data);
    check_bounds(options.bounds_overrides);
    if (options.max_iterations < 1) throw InvalidParameters("max_iterations must be >= 1");
    if (!(options.tolerance > 0.0)) throw InvalidParameters("tolerance must be > 0");
    if (options.restarts < 0) throw InvalidParameters("restarts must be >= 0");

    ParameterVector heuristic = suggest_start(id, data, options.respiration);
    clamp_into_bounds(heuristic, options.bounds_overrides);
    const std::vector<double> z0 = transform(heuristic, options.bounds_overrides);

    std::vector<std::vector<double>> starts{z0};
    std::mt19937_64 rng(options.seed);
    for (int r = 0; r < options.restarts; ++r) {
        std::vector<double> z = z0;
        for (double& v : z) v += jitter(rng);
        starts.push_back(std::move(z));
    }

    // Inhibition placed inside the observed range; tanh and exp factors are
    // flat in the scale once it sits far beyond max(I).
    for (double factor : kInhibitionStartFactors) {
        ParameterVector start = heuristic;
        const double at = factor * data.max_irradiance();
        if (const auto scale = inhibition_scale_param(id)) {
            start.set(*scale, at);
        } else if (start.contains(Param::beta)) {
            start.set(Param::beta, start.get(Param::p_max) / at);
        } else {
            break;
        }
        clamp_into_bounds(start, options.bounds_overrides);
        try {
            starts.push_back(transform(start, options.bounds_overrides));
        } catch (const InvalidParameters&) {
        }
    }

    FitResult partner_fit;
    if (options.nested_start && !partner) {
        if (const auto pid = reduction_partner(id)) {
            FitOptions inner = options;
            inner.nested_start = false;
            try {
                partner_fit = fit_impl(data, *pid, inner, nullptr);
                partner = &partner_fit;
            } catch (const Error&) {
                partner = nullptr;
            }
        }
    }
    if (options.nested_start && partner) {
        if (auto z = nested_start_from(*partner, heuristic, data, options)) {
            starts.push_back(std::move(*z));
        }
    }

    FitProblem problem(data, id, options);
    const Objective objective = [&problem](std::span<const double> z) { return problem(z); };
    const NelderMeadOptions nm{options.max_iterations, options.tolerance, 0.05};

    std::optional<NelderMeadResult> best;
    int iterations = 0;
    for (const auto& z : starts) {
        if (!std::isfinite(objective(z))) continue;
        auto run = nelder_mead(objective, z, nm);
        iterations += run.iterations;
        if (!best || run.value < best->value) best = std::move(run);
    }
    if (!best) {
        throw ConvergenceError("objective is not finite at any start for model " + spec.name);
    }

    // Restart from the best vertex until the simplex stops finding improvements.
    // Below MSE = 1 the spread tolerance is taken relative to the current best,
    // floored at the roundoff level of the rates.
    double max_abs_rate = 0.0;
    for (double p : data.rate) max_abs_rate = std::max(max_abs_rate, std::abs(p));
    const double mse_floor = std::max(1e-9 * max_abs_rate * 1e-9 * max_abs_rate, 1e-300);
    bool converged = best->converged;
    for (int round = 0; round < kMaxPolishRounds; ++round) {
        NelderMeadOptions polish = nm;
        if (options.criterion == Criterion::mse) {
            polish.tolerance = options.tolerance * std::clamp(best->value, mse_floor, 1.0);
        }
        auto run = nelder_mead(objective, best->argmin, polish);
        iterations += run.iterations;
        const double gain = best->value - run.value;
        converged = run.converged;
        if (run.value <= best->value) best = std::move(run);
        if (!(gain > polish.tolerance)) break;
    }

    FitResult fit;
    fit.model = id;
    fit.dataset_id = data.id;
    fit.criterion = options.criterion;
    fit.bounds = options.bounds_overrides;
    fit.params = untransform(id, best->argmin, options.respiration, options.bounds_overrides);
    fit.objective_value = best->value;
    fit.sse = problem.sse(best->argmin);
    fit.n = data.size();
    fit.n_free = n_free;
    fit.k = n_free + (options.criterion == Criterion::mle ? 1 : 0);
    fit.sigma2_hat = fit.sse / static_cast<double>(fit.n);
    fit.sigma2_floored = fit.sigma2_hat < kSigma2Floor;
    fit.converged = converged;
    fit.iterations = iterations;

    const double sst = total_sum_squares(data);
    if (sst > 0.0) {
        fit.r2 = 1.0 - fit.sse / sst;
        const double dn = static_cast<double>(fit.n);
        const double dk = static_cast<double>(fit.n_free);
        fit.adj_r2 = dn - dk - 1.0 > 0.0 ? 1.0 - (1.0 - fit.r2) * (dn - 1.0) / (dn - dk - 1.0)
                                         : std::numeric_limits<double>::quiet_NaN();
    } else {
        fit.r2 = std::numeric_limits<double>::quiet_NaN();
        fit.adj_r2 = std::numeric_limits<double>::quiet_NaN();
    }

    try {
        fit.derived = derive_quantities(id, fit.params);
    } catch (const Error& e) {
        fit.derived_error = e.what();
    }
    return fit;
}

FitResult failed_fit(const Dataset& data, ModelId id, const FitOptions& options, std::string why) {
    FitResult fit;
    fit.model = id;
    fit.dataset_id = data.id;
    fit.criterion = options.criterion;
    fit.bounds = options.bounds_overrides;
    fit.n = data.size();
    fit.n_free = model_spec(id).parameters.size() + (options.respiration ? 1 : 0);
    fit.k = fit.n_free + (options.criterion == Criterion::mle ? 1 : 0);
    fit.r2 = std::numeric_limits<double>::quiet_NaN();
    fit.adj_r2 = std::numeric_limits<double>::quiet_NaN();
    fit.failure = std::move(why);
    return fit;
}

FitResult fit_or_record(const Dataset& data, ModelId id, const FitOptions& options,
                        const FitResult* partner) {
    try {
        return fit_impl(data, id, options, partner);
    } catch (const Error& e) {
        return failed_fit(data, id, options, e.what());
    }
}

bool needs_partner(ModelId id, const FitOptions& options) {
    return options.nested_start && reduction_partner(id).has_value();
}

std::vector<FitResult> fit_all_impl(const Dataset& data, const FitOptions& options, bool parallel) {
    // Whole-dataset problems are reported once instead of 24 times.
    validate_dataset(data);

    std::vector<FitResult> fits(kModelCount);
    std::vector<ModelId> first, second;
    for (std::size_t i = 0; i < kModelCount; ++i) {
        const auto id = static_cast<ModelId>(i);
        (needs_partner(id, options) ? second : first).push_back(id);
    }

    // Pass 1: everything without a partner; pass 2: Ph models reuse their
    // partner's fit as the nested start. Each slot is written by one thread.
    auto run_pass = [&](const std::vector<ModelId>& ids) {
        const auto count = static_cast<std::ptrdiff_t>(ids.size());
        auto body = [&](std::ptrdiff_t j) {
            const ModelId id = ids[static_cast<std::size_t>(j)];
            const FitResult* partner = nullptr;
            if (auto pid = reduction_partner(id); pid && options.nested_start) {
                partner = &fits[static_cast<std::size_t>(*pid)];
            }
            fits[static_cast<std::size_t>(id)] = fit_or_record(data, id, options, partner);
        };
        if (parallel) {
            const int threads = resolve_threads(options.threads);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads) if (threads > 1)
            for (std::ptrdiff_t j = 0; j < count; ++j) body(j);
        } else {
            for (std::ptrdiff_t j = 0; j < count; ++j) body(j);
        }
    };
    run_pass(first);
    run_pass(second);

    if (std::none_of(fits.begin(), fits.end(), [](const FitResult& f) { return f.ok(); })) {
        throw ConvergenceError("every model failed on dataset '" + data.id + "'");
    }
    sort_by_r2(fits);
    return fits;
}

}  // namespace

FitResult fit_model(const Dataset& data, ModelId id, const FitOptions& options) {
    return fit_impl(data, id, options, nullptr);
}

FitResult fit_model(const Dataset& data, ModelId id, const FitOptions& options,
                    const FitResult& partner) {
    const auto expected = reduction_partner(id);
    if (!expected || partner.model != *expected) {
        throw InvalidParameters(std::string(to_string(partner.model)) +
                                " is not the no-inhibition partner of " + std::string(to_string(id)));
    }
    return fit_impl(data, id, options, &partner);
}

void sort_by_r2(std::vector<FitResult>& fits) {
    std::stable_sort(fits.begin(), fits.end(), [](const FitResult& a, const FitResult& b) {
        const bool a_ok = a.ok() && !std::isnan(a.r2);
        const bool b_ok = b.ok() && !std::isnan(b.r2);
        if (a_ok != b_ok) return a_ok;
        if (a_ok && a.r2 != b.r2) return a.r2 > b.r2;
        if (a.n_free != b.n_free) return a.n_free < b.n_free;
        return a.model < b.model;
    });
}

std::vector<FitResult> fit_all(const Dataset& data, const FitOptions& options) {
    return fit_all_impl(data, options, true);
}

namespace serial {
std::vector<FitResult> fit_all(const Dataset& data, const FitOptions& options) {
    return fit_all_impl(data, options, false);
}
}  // namespace serial

}  // namespace picurve
