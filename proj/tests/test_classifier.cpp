#include <gtest/gtest.h>

#include <algorithm>

#include "helpers.hpp"
#include "picurve/classifier.hpp"
#include "picurve/error.hpp"
#include "picurve/inference.hpp"

using namespace picurve;
using testing_support::linspace;
using testing_support::noiseless;

namespace {

CandidateEvidence ev(ModelId id, double aicc, std::optional<double> i_beta = std::nullopt) {
    CandidateEvidence e;
    e.model = id;
    e.aicc = aicc;
    e.i_beta = i_beta;
    return e;
}

CandidateEvidence failed(ModelId id) {
    CandidateEvidence e;
    e.model = id;
    e.failure = "did not converge";
    return e;
}

Dataset add_noise(Dataset d, double sigma, std::uint64_t seed) {
    NormalStream z(seed);
    for (double& p : d.rate) p += sigma * z.next();
    return d;
}

Dataset linear_clean() { return noiseless("lin", ParameterVector(ModelId::lm, {0.1}), linspace(10, 100, 10)); }
Dataset saturating_clean() {
    return noiseless("sat", ParameterVector(ModelId::LS5, {10, 100}), linspace(0, 800, 16));
}
Dataset inhibited_clean() {
    return noiseless("inh", ParameterVector(ModelId::Ph10, {10, 100, 400}), linspace(0, 1200, 16));
}

}  // namespace

// ------------------------------------------------------------- selection rule

TEST(SelectLabel, LowestAiccWins) {
    const auto l = select_label({ev(ModelId::lm, 50), ev(ModelId::LS5, 20), ev(ModelId::Ph10, 30, 500)}, 1000);
    EXPECT_EQ(l.label, ModelClass::light_saturated);
    EXPECT_EQ(l.chosen_model, ModelId::LS5);
    EXPECT_TRUE(l.guards_applied.empty());
    EXPECT_EQ(l.evidence.size(), 3u);
}

TEST(SelectLabel, TiesResolveToSimplerClass) {
    auto l = select_label({ev(ModelId::lm, 10.0), ev(ModelId::LS5, 8.5), ev(ModelId::Ph10, 20, 500)}, 1000);
    EXPECT_EQ(l.label, ModelClass::light_limited);
    l = select_label({ev(ModelId::lm, 12.0), ev(ModelId::LS5, 10.0), ev(ModelId::Ph10, 8.5, 500)}, 1000);
    EXPECT_EQ(l.label, ModelClass::light_saturated);
    l = select_label({ev(ModelId::lm, 12.0), ev(ModelId::LS5, 10.5), ev(ModelId::Ph10, 8.5, 500)}, 1000);
    EXPECT_EQ(l.label, ModelClass::photoinhibited);
}

TEST(SelectLabel, GuardDemotesOutOfRangeInhibition) {
    const auto l = select_label({ev(ModelId::lm, 50), ev(ModelId::LS5, 20), ev(ModelId::Ph10, 5, 5000)}, 1200);
    EXPECT_EQ(l.label, ModelClass::light_saturated);
    EXPECT_EQ(l.chosen_model, ModelId::LS5);
    ASSERT_EQ(l.guards_applied.size(), 1u);
    const auto edge = select_label({ev(ModelId::LS5, 20), ev(ModelId::Ph10, 5, 1200)}, 1200);
    EXPECT_EQ(edge.label, ModelClass::light_saturated);
    const auto inside = select_label({ev(ModelId::LS5, 20), ev(ModelId::Ph10, 5, 1199)}, 1200);
    EXPECT_EQ(inside.label, ModelClass::photoinhibited);
}

TEST(SelectLabel, FailuresAreSkipped) {
    const auto l = select_label({failed(ModelId::lm), ev(ModelId::LS5, 20), failed(ModelId::Ph10)}, 1000);
    EXPECT_EQ(l.label, ModelClass::light_saturated);
    EXPECT_THROW(select_label({failed(ModelId::lm), failed(ModelId::LS5), failed(ModelId::Ph10)}, 1000),
                 ConvergenceError);
}

// ------------------------------------------------------------------- pipeline

TEST(Classify, ExactLineIsLightLimited) {
    const auto l = classify(linear_clean());
    EXPECT_EQ(l.label, ModelClass::light_limited);
    EXPECT_EQ(l.chosen_model, ModelId::lm);
}

TEST(Classify, NoisySaturatingCurve) {
    const auto d = add_noise(saturating_clean(), 0.2, 3);
    EXPECT_EQ(classify(d).label, ModelClass::light_saturated);
}

TEST(Classify, InhibitionInsideRange) {
    std::vector<FitResult> fits;
    const auto l = classify(inhibited_clean(), {}, &fits);
    EXPECT_EQ(l.label, ModelClass::photoinhibited);
    ASSERT_EQ(fits.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(fits[i].model, kClassifierCandidates[i]);
    for (const auto& f : fits) EXPECT_EQ(f.criterion, Criterion::mse);
}

TEST(Classify, EvidenceMatchesInformationCriteria) {
    std::vector<FitResult> fits;
    const auto d = add_noise(inhibited_clean(), 0.2, 4);
    const auto l = classify(d, {}, &fits);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(l.evidence[i].model, fits[i].model);
        EXPECT_EQ(l.evidence[i].aicc, information_criteria(fits[i]).aicc);
    }
    ASSERT_TRUE(l.evidence[2].i_beta.has_value());
    EXPECT_EQ(*l.evidence[2].i_beta, fits[2].params.get(Param::i_beta));
}

TEST(Classify, CriterionOptionIsIgnored) {
    const auto d = add_noise(saturating_clean(), 0.2, 5);
    FitOptions mle;
    mle.criterion = Criterion::mle;
    const auto a = classify(d);
    const auto b = classify(d, mle);
    EXPECT_EQ(a.label, b.label);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.evidence[i].aicc, b.evidence[i].aicc);
}

TEST(Classify, GuardSoundnessOnRandomCurves) {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 12; ++rep) {
        const auto truth = testing_support::random_params(ModelId::Ph10, rng);
        const auto d = add_noise(noiseless("r", truth, linspace(0, 1500, 12)), 0.3, 200 + rep);
        const auto l = classify(d);
        if (l.label == ModelClass::photoinhibited) {
            ASSERT_TRUE(l.evidence[2].i_beta.has_value());
            EXPECT_LT(*l.evidence[2].i_beta, d.max_irradiance());
        }
    }
}

TEST(Classify, DeterministicLabels) {
    const auto d = add_noise(inhibited_clean(), 0.3, 6);
    const auto a = classify(d);
    const auto b = classify(d);
    EXPECT_EQ(a.label, b.label);
    EXPECT_EQ(a.chosen_model, b.chosen_model);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.evidence[i].aicc, b.evidence[i].aicc);
}

TEST(Classify, ScaleEquivariance) {
    for (const auto& base : {linear_clean(), saturating_clean(), inhibited_clean()}) {
        const auto want = classify(base).label;
        for (double c : {0.25, 4.0}) {
            Dataset xi = base;
            for (double& i : xi.irradiance) i *= c;
            EXPECT_EQ(classify(xi).label, want) << base.id << " irradiance x" << c;

            Dataset xp = base;
            for (double& p : xp.rate) p *= c;
            const auto scaled = classify(xp);
            EXPECT_EQ(scaled.label, want) << base.id << " rate x" << c;
        }
    }
}

TEST(Classify, RateScalingPreservesAiccOrdering) {
    const auto base = add_noise(inhibited_clean(), 0.2, 7);
    const auto a = classify(base);
    Dataset xp = base;
    for (double& p : xp.rate) p *= 3.0;
    const auto b = classify(xp);
    auto rank = [](const ClassLabel& l) {
        std::vector<std::size_t> idx{0, 1, 2};
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t i, std::size_t j) { return l.evidence[i].aicc < l.evidence[j].aicc; });
        return idx;
    };
    EXPECT_EQ(rank(a), rank(b));
}

// ---------------------------------------------------------------------- batch

TEST(ClassifyBatch, OnePerClass) {
    const std::vector<Dataset> batch{linear_clean(), add_noise(saturating_clean(), 0.1, 1), inhibited_clean()};
    const auto r = classify_batch(batch);
    ASSERT_EQ(r.labels.size(), 3u);
    for (const auto& l : r.labels) ASSERT_TRUE(l.has_value());
    EXPECT_EQ(r.labels[0]->label, ModelClass::light_limited);
    EXPECT_EQ(r.labels[1]->label, ModelClass::light_saturated);
    EXPECT_EQ(r.labels[2]->label, ModelClass::photoinhibited);
    for (double f : r.summary.frequencies) EXPECT_DOUBLE_EQ(f, 1.0 / 3.0);
    EXPECT_EQ(r.summary.total, 3u);
    EXPECT_EQ(r.summary.failures, 0u);
}

TEST(ClassifyBatch, IdenticalDatasets) {
    const std::vector<Dataset> batch(4, add_noise(saturating_clean(), 0.2, 2));
    const auto r = classify_batch(batch);
    for (const auto& l : r.labels) EXPECT_EQ(l->label, r.labels[0]->label);
    const auto k = static_cast<std::size_t>(r.labels[0]->label);
    EXPECT_EQ(r.summary.frequencies[k], 1.0);
    EXPECT_EQ(r.summary.counts[k], 4u);
}

TEST(ClassifyBatch, InvalidDatasetCountedNotFatal) {
    Dataset bad = linear_clean();
    bad.id = "bad";
    bad.rate[2] = std::numeric_limits<double>::quiet_NaN();
    const std::vector<Dataset> batch{linear_clean(), bad, inhibited_clean()};
    const auto r = classify_batch(batch);
    EXPECT_EQ(r.summary.failures, 1u);
    EXPECT_EQ(r.summary.total, 2u);
    EXPECT_FALSE(r.labels[1].has_value());
    EXPECT_FALSE(r.errors[1].empty());
    EXPECT_TRUE(r.errors[0].empty());
    EXPECT_DOUBLE_EQ(r.summary.frequencies[0] + r.summary.frequencies[1] + r.summary.frequencies[2], 1.0);
    EXPECT_DOUBLE_EQ(r.summary.frequencies[static_cast<std::size_t>(ModelClass::light_limited)], 0.5);
}

TEST(ClassifyBatch, EmptyInputRejected) {
    EXPECT_THROW(classify_batch(std::span<const Dataset>{}), DataError);
}

TEST(ClassifyBatch, SummarizeCounts) {
    std::vector<std::optional<ClassLabel>> labels(10);
    for (std::size_t i = 0; i < 10; ++i) {
        if (i == 9) continue;
        ClassLabel l;
        l.label = i < 5 ? ModelClass::light_limited : (i < 8 ? ModelClass::light_saturated : ModelClass::photoinhibited);
        labels[i] = l;
    }
    const auto s = summarize(labels);
    EXPECT_EQ(s.counts, (std::array<std::size_t, 3>{5, 3, 1}));
    EXPECT_EQ(s.total, 9u);
    EXPECT_EQ(s.failures, 1u);
    EXPECT_DOUBLE_EQ(s.frequencies[0], 5.0 / 9.0);
}
