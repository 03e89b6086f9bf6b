#pragma once

// Labels a P-I curve as light-limited, light-saturated or photoinhibited by
// fitting one representative per class (lm, LS5, Ph10) and comparing AICc.
// A candidate within 2 AICc units of the best is preferred when it belongs to
// a simpler class. A photoinhibited label additionally requires the fitted
// I_beta to lie inside the observed irradiance range.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "picurve/dataset.hpp"
#include "picurve/fit.hpp"

namespace picurve {

inline constexpr double kAiccTieMargin = 2.0;

struct CandidateEvidence {
    ModelId model = ModelId::lm;
    double aicc = 0.0;
    /// Fitted I_beta for the photoinhibited candidate.
    std::optional<double> i_beta;
    std::optional<std::string> failure;
};

struct ClassLabel {
    ModelClass label = ModelClass::light_limited;
    ModelId chosen_model = ModelId::lm;
    std::vector<CandidateEvidence> evidence;
    std::vector<std::string> guards_applied;
};

/// Indexed by ModelClass. `total` counts successful classifications only;
/// frequencies are relative to it.
struct ClassSummary {
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> frequencies{};
    std::size_t total = 0;
    std::size_t failures = 0;
};

/// The candidate triple, simplest class first.
inline constexpr std::array<ModelId, 3> kClassifierCandidates{ModelId::lm, ModelId::LS5, ModelId::Ph10};

/// Selection rule on already computed evidence; throws ConvergenceError when
/// no candidate succeeded.
ClassLabel select_label(std::vector<CandidateEvidence> evidence, double max_irradiance);

/// Fits the candidate triple under MSE (other options shared) and labels the dataset.
ClassLabel classify(const Dataset& data, const FitOptions& options = {});

/// Same, returning the three fits as well.
ClassLabel classify(const Dataset& data, const FitOptions& options,
                    std::vector<FitResult>* fits_out);

struct BatchClassification {
    std::vector<std::optional<ClassLabel>> labels;  // nullopt where classification failed
    std::vector<std::string> errors;                // empty string on success
    ClassSummary summary;
};

ClassSummary summarize(std::span<const std::optional<ClassLabel>> labels);

/// Classifies every dataset; failures are counted, not fatal. Throws on empty input.
BatchClassification classify_batch(std::span<const Dataset> datasets, const FitOptions& options = {});

namespace serial {
BatchClassification classify_batch(std::span<const Dataset> datasets, const FitOptions& options = {});
}  // namespace serial

}  // namespace picurve
