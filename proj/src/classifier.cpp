#include "picurve/classifier.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "picurve/error.hpp"
#include "picurve/inference.hpp"
#include "picurve/parallel.hpp"

namespace picurve {

namespace {

std::size_t class_index(ModelClass c) {
    return static_cast<std::size_t>(c);
}

BatchClassification batch_impl(std::span<const Dataset> datasets, const FitOptions& options,
                               int threads) {
    if (datasets.empty()) throw DataError("classify_batch needs at least one dataset");
    BatchClassification out;
    out.labels.resize(datasets.size());
    out.errors.resize(datasets.size());
    const auto count = static_cast<std::ptrdiff_t>(datasets.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads) if (threads > 1)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            out.labels[i] = classify(datasets[i], options);
        } catch (const Error& e) {
            out.errors[i] = e.what();
        }
    }
    out.summary = summarize(out.labels);
    return out;
}

}  // namespace

ClassLabel select_label(std::vector<CandidateEvidence> evidence, double max_irradiance) {
    ClassLabel out;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : evidence) {
        if (!e.failure && e.aicc < best) best = e.aicc;
    }
    if (!(best < std::numeric_limits<double>::infinity())) {
        // Every AICc is +inf or every fit failed.
        const bool any = std::any_of(evidence.begin(), evidence.end(),
                                     [](const CandidateEvidence& e) { return !e.failure; });
        if (!any) throw ConvergenceError("every classifier candidate failed");
    }

    // Simplest class among the candidates within the tie margin of the best.
    const CandidateEvidence* chosen = nullptr;
    for (const auto& e : evidence) {
        if (e.failure) continue;
        const bool near_best = e.aicc < best + kAiccTieMargin || e.aicc == best;
        if (!near_best) continue;
        if (!chosen || model_spec(e.model).model_class < model_spec(chosen->model).model_class) {
            chosen = &e;
        }
    }
    out.chosen_model = chosen->model;
    out.label = model_spec(chosen->model).model_class;

    if (out.label == ModelClass::photoinhibited) {
        const double i_beta = chosen->i_beta.value_or(std::numeric_limits<double>::infinity());
        if (!(i_beta < max_irradiance)) {
            out.guards_applied.push_back("I_beta = " + std::to_string(i_beta) +
                                         " is not below max(I) = " + std::to_string(max_irradiance) +
                                         "; demoted to light-saturated");
            out.label = ModelClass::light_saturated;
            out.chosen_model = ModelId::LS5;
        }
    }
    out.evidence = std::move(evidence);
    return out;
}

ClassLabel classify(const Dataset& data, const FitOptions& options,
                    std::vector<FitResult>* fits_out) {
    validate_dataset(data);
    FitOptions shared = options;
    shared.criterion = Criterion::mse;

    std::vector<FitResult> fits;
    fits.reserve(kClassifierCandidates.size());
    std::vector<CandidateEvidence> evidence;
    const FitResult* ls5 = nullptr;
    for (ModelId id : kClassifierCandidates) {
        CandidateEvidence e;
        e.model = id;
        try {
            FitResult fit = (id == ModelId::Ph10 && ls5 && ls5->ok())
                                ? fit_model(data, id, shared, *ls5)
                                : fit_model(data, id, shared);
            e.aicc = information_criteria(fit).aicc;
            if (id == ModelId::Ph10) e.i_beta = fit.params.get(Param::i_beta);
            fits.push_back(std::move(fit));
        } catch (const Error& err) {
            e.failure = err.what();
            FitResult failed;
            failed.model = id;
            failed.dataset_id = data.id;
            failed.failure = err.what();
            fits.push_back(std::move(failed));
        }
        if (id == ModelId::LS5) ls5 = &fits.back();
        evidence.push_back(std::move(e));
    }
    ClassLabel label = select_label(std::move(evidence), data.max_irradiance());
    if (fits_out) *fits_out = std::move(fits);
    return label;
}

ClassLabel classify(const Dataset& data, const FitOptions& options) {
    return classify(data, options, nullptr);
}

ClassSummary summarize(std::span<const std::optional<ClassLabel>> labels) {
    ClassSummary s;
    for (const auto& l : labels) {
        if (!l) {
            ++s.failures;
            continue;
        }
        ++s.counts[class_index(l->label)];
        ++s.total;
    }
    if (s.total > 0) {
        for (std::size_t i = 0; i < 3; ++i) {
            s.frequencies[i] = static_cast<double>(s.counts[i]) / static_cast<double>(s.total);
        }
    }
    return s;
}

BatchClassification classify_batch(std::span<const Dataset> datasets, const FitOptions& options) {
    return batch_impl(datasets, options, resolve_threads(options.threads));
}

namespace serial {
BatchClassification classify_batch(std::span<const Dataset> datasets, const FitOptions& options) {
    return batch_impl(datasets, options, 1);
}
}  // namespace serial

}  // namespace picurve
