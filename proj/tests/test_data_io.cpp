#include <gtest/gtest.h>

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "picurve/classifier.hpp"
#include "picurve/data_io.hpp"
#include "picurve/error.hpp"

using namespace picurve;
using testing_support::linspace;
using testing_support::noiseless;

namespace {

const char* kTwoExperiments =
    "pi_information,I,P\n"
    "A,0,0.1\nA,50,2.0\nA,100,3.5\nA,200,5.0\nA,400,6.0\n"
    "B,0,-0.2\nB,25,1.0\nB,75,2.5\nB,150,4.0\nB,300,5.5\nB,600,6.1\n";

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string run_capture(const std::string& cmd) {
    std::string out;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return out;
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
    pclose(pipe);
    return out;
}

}  // namespace

// ------------------------------------------------------------------- parsing

TEST(Csv, TwoExperiments) {
    const auto raw = parse_csv(std::string_view(kTwoExperiments));
    ASSERT_EQ(raw.rows.size(), 11u);
    EXPECT_EQ(raw.rows.front().row, 2u);
    const auto report = format_check(raw);
    EXPECT_TRUE(report.ok());
    ASSERT_EQ(report.datasets.size(), 2u);
    EXPECT_EQ(report.datasets[0].id, "A");
    EXPECT_EQ(report.datasets[1].id, "B");
    EXPECT_EQ(report.datasets[1].size(), 6u);
    EXPECT_EQ(report.datasets[1].rate[0], -0.2);
}

TEST(Csv, BomCrlfAndColumnOrder) {
    const std::string text =
        "\xEF\xBB\xBFP,site,pi_information,I\r\n1,north,X,0\r\n2,north,X,10\r\n3,north,X,20\r\n"
        "4,north,X,30\r\n5,north,X,40\r\n";
    const auto raw = parse_csv(std::string_view(text));
    ASSERT_EQ(raw.rows.size(), 5u);
    EXPECT_EQ(raw.extra_columns, std::vector<std::string>{"site"});
    const auto report = format_check(raw);
    ASSERT_TRUE(report.ok());
    EXPECT_EQ(report.datasets[0].irradiance, (std::vector<double>{0, 10, 20, 30, 40}));
    EXPECT_EQ(report.datasets[0].rate, (std::vector<double>{1, 2, 3, 4, 5}));
}

TEST(Csv, HeaderOnlyIsEmpty) {
    const auto raw = parse_csv(std::string_view("pi_information,I,P\n"));
    EXPECT_TRUE(raw.rows.empty());
    const auto report = format_check(raw);
    EXPECT_TRUE(report.datasets.empty());
}

TEST(Csv, MissingColumnNamed) {
    try {
        parse_csv(std::string_view("pi_information,I\nA,1\n"));
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find('P'), std::string::npos);
    }
    EXPECT_THROW(parse_csv(std::string_view("")), DataError);
    EXPECT_THROW(load_csv("/nonexistent/file.csv"), DataError);
}

TEST(Csv, QuotedFields) {
    const std::string text =
        "pi_information,I,P,note\n\"A,1\",0,0,\"a \"\"quoted\"\"\nline\"\n\"A,1\",1,1,x\n";
    const auto raw = parse_csv(std::string_view(text));
    ASSERT_EQ(raw.rows.size(), 2u);
    EXPECT_EQ(raw.rows[0].experiment, "A,1");
    EXPECT_EQ(raw.rows[0].extra[0], "a \"quoted\"\nline");
    EXPECT_EQ(raw.rows[1].row, 4u);
    EXPECT_EQ(csv_escape("plain"), "plain");
    EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_escape("q\""), "\"q\"\"\"");
}

// ---------------------------------------------------------------- validation

TEST(FormatCheck, WellFormedEightPoints) {
    std::string text = "pi_information,I,P\n";
    for (int i = 0; i < 8; ++i) text += "E," + std::to_string(i * 100) + "," + std::to_string(i) + "\n";
    const auto report = format_check(parse_csv(std::string_view(text)));
    EXPECT_TRUE(report.ok());
    ASSERT_EQ(report.datasets.size(), 1u);
    EXPECT_EQ(report.datasets[0].size(), 8u);
}

TEST(FormatCheck, NegativeIrradianceReportsRow) {
    const auto report = format_check(
        parse_csv(std::string_view("pi_information,I,P\nE,0,0\nE,-5,1\nE,10,2\nE,20,3\nE,30,4\nE,40,5\n")));
    ASSERT_FALSE(report.ok());
    EXPECT_EQ(report.violations[0].message, "negative irradiance, row 3");
    EXPECT_EQ(report.violations[0].row, 3u);
}

TEST(FormatCheck, SmallExperiment) {
    const auto report =
        format_check(parse_csv(std::string_view("pi_information,I,P\nE,0,0\nE,10,1\nE,20,2\nE,30,3\n")));
    ASSERT_EQ(report.violations.size(), 1u);
    EXPECT_EQ(report.violations[0].message.rfind("n < 5", 0), 0u);
    EXPECT_EQ(report.violations[0].row, 0u);
    EXPECT_TRUE(report.datasets.empty());
}

TEST(FormatCheck, ReportsEveryViolation) {
    const std::string text =
        "pi_information,I,P\n"
        "E,0,0\nE,abc,1\nE,,2\nE,30,inf\nE,40,\nE,50,5\nE,60,6\n"
        "F,0,0\nF,0,1\nF,10,2\nF,10,3\nF,20,4\n"
        "G,0,0\nG,10,1\nG,20,2\nG,30,3\nG,40,4\n";
    const auto report = format_check(parse_csv(std::string_view(text)));
    std::set<std::size_t> rows;
    for (const auto& v : report.violations) rows.insert(v.row);
    EXPECT_TRUE(rows.count(3));
    EXPECT_TRUE(rows.count(4));
    EXPECT_TRUE(rows.count(5));
    EXPECT_TRUE(rows.count(6));
    bool distinct_reported = false;
    for (const auto& v : report.violations) {
        if (v.experiment == "F" && v.message.find("distinct") != std::string::npos) distinct_reported = true;
    }
    EXPECT_TRUE(distinct_reported);
    ASSERT_EQ(report.datasets.size(), 1u);
    EXPECT_EQ(report.datasets[0].id, "G");
}

TEST(FormatCheck, IdempotentOnValidatedData) {
    const auto first = format_check(parse_csv(std::string_view(kTwoExperiments)));
    const auto second = format_check(to_raw_table(first.datasets));
    EXPECT_TRUE(second.ok());
    ASSERT_EQ(second.datasets.size(), first.datasets.size());
    for (std::size_t i = 0; i < first.datasets.size(); ++i) {
        EXPECT_EQ(second.datasets[i].irradiance, first.datasets[i].irradiance);
        EXPECT_EQ(second.datasets[i].rate, first.datasets[i].rate);
    }
}

// ----------------------------------------------------------------- round trip

TEST(Csv, RoundTripIsBitExact) {
    std::mt19937_64 rng(17);
    std::vector<Dataset> sets;
    for (int k = 0; k < 3; ++k) {
        Dataset d;
        d.id = "set" + std::to_string(k);
        for (int j = 0; j < 30; ++j) {
            d.irradiance.push_back(testing_support::uniform(rng, 0, 2500));
            d.rate.push_back(testing_support::uniform(rng, -3, 25) * std::pow(10.0, k - 1));
        }
        d.irradiance[0] = 0.0;
        d.rate[1] = 1e-300;
        d.rate[2] = -0.0;
        sets.push_back(d);
    }
    const auto text = write_csv(sets);
    const auto back = format_check(parse_csv(std::string_view(text)));
    ASSERT_TRUE(back.ok());
    ASSERT_EQ(back.datasets.size(), sets.size());
    for (std::size_t k = 0; k < sets.size(); ++k) {
        for (std::size_t j = 0; j < sets[k].size(); ++j) {
            EXPECT_EQ(std::bit_cast<std::uint64_t>(back.datasets[k].irradiance[j]),
                      std::bit_cast<std::uint64_t>(sets[k].irradiance[j]));
            EXPECT_EQ(std::bit_cast<std::uint64_t>(back.datasets[k].rate[j]),
                      std::bit_cast<std::uint64_t>(sets[k].rate[j]));
        }
    }
    EXPECT_EQ(write_csv(back.datasets), text);
}

TEST(Csv, NumberFormatting) {
    EXPECT_EQ(format_number(0.1), "0.10000000000000001");
    EXPECT_EQ(format_number(2.0), "2");
    EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
    EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
}

// ---------------------------------------------------------------------- grid

TEST(HighResGrid, Examples) {
    Dataset d;
    d.irradiance = {0, 300, 1000, 20};
    d.rate = {0, 1, 2, 3};
    EXPECT_EQ(high_res_grid(d, 5), (std::vector<double>{0, 250, 500, 750, 1000}));
    EXPECT_EQ(high_res_grid(d, 2), (std::vector<double>{0, 1000}));
    const auto g = high_res_grid(d);
    ASSERT_EQ(g.size(), 200u);
    for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
    EXPECT_THROW(high_res_grid(d, 1), InvalidParameters);
}

// ---------------------------------------------------------------------- tidy

TEST(Tidy, Ph10WithRespirationRowCounts) {
    auto d = noiseless("ph", ParameterVector(ModelId::Ph10, {10, 80, 900}), linspace(0, 2000, 20));
    NormalStream z(3);
    for (double& p : d.rate) p += 0.2 * z.next();
    FitOptions o;
    o.respiration = true;
    const auto report = analyze_fit(fit_model(d, ModelId::Ph10, o), d);
    ASSERT_TRUE(report.intervals.has_value()) << report.diagnostics_error;
    const std::vector<FitResult> fits{report.fit};
    const std::vector<std::optional<IntervalSet>> intervals{report.intervals};
    const std::vector<std::optional<CriteriaSet>> criteria{report.criteria};
    const auto rows = tidy(fits, intervals, criteria);
    ASSERT_EQ(rows.size(), 11u);
    const std::vector<std::string> want{"P_max", "I_alpha", "I_beta", "R", "sse", "r2",
                                        "adj_r2", "aic", "aicc", "bic", "converged"};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].quantity, want[i]);
        EXPECT_TRUE(rows[i].estimate.has_value()) << rows[i].quantity;
        EXPECT_TRUE(rows[i].reason.empty()) << rows[i].quantity << ": " << rows[i].reason;
    }
    EXPECT_EQ(*rows[0].estimate, report.fit.params.get(Param::p_max));
    EXPECT_EQ(*rows.back().estimate, 1.0);
}

TEST(Tidy, AllModelsNoDuplicateKeysAndEveryParameterOnce) {
    auto d = noiseless("c", ParameterVector(ModelId::Ph10, {10, 80, 900}), linspace(0, 2000, 20));
    NormalStream z(4);
    for (double& p : d.rate) p += 0.2 * z.next();
    const auto fits = fit_all(d);
    std::vector<std::optional<IntervalSet>> intervals;
    std::vector<std::optional<CriteriaSet>> criteria;
    std::size_t expected = 0;
    for (const auto& f : fits) {
        const auto r = analyze_fit(f, d);
        intervals.push_back(r.intervals);
        criteria.push_back(r.criteria);
        expected += f.params.size() + 7;
    }
    const auto rows = tidy(fits, intervals, criteria);
    EXPECT_EQ(rows.size(), expected);
    std::set<std::tuple<std::string, ModelId, std::string>> keys;
    for (const auto& r : rows) EXPECT_TRUE(keys.emplace(r.dataset_id, r.model, r.quantity).second);
    for (const auto& f : fits) {
        for (Param p : model_spec(f.model).parameters) {
            EXPECT_EQ(keys.count({f.dataset_id, f.model, std::string(to_string(p))}), 1u);
        }
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_LE(std::tie(rows[i - 1].dataset_id, rows[i - 1].model),
                  std::tie(rows[i].dataset_id, rows[i].model));
    }
}

TEST(Tidy, FailedFitHasNullsWithReason) {
    FitResult f;
    f.model = ModelId::LS5;
    f.dataset_id = "x";
    f.failure = "every start non-finite";
    const std::vector<FitResult> fits{f};
    const std::vector<std::optional<IntervalSet>> intervals{std::nullopt};
    const std::vector<std::optional<CriteriaSet>> criteria{std::nullopt};
    const auto rows = tidy(fits, intervals, criteria);
    ASSERT_EQ(rows.size(), 2u + 7u);
    for (const auto& r : rows) {
        if (r.quantity == "converged") {
            EXPECT_EQ(*r.estimate, 0.0);
            continue;
        }
        EXPECT_FALSE(r.estimate.has_value()) << r.quantity;
        EXPECT_EQ(r.reason, "not-converged");
    }
}

TEST(Tidy, MismatchedInputsRejected) {
    const std::vector<FitResult> fits(2);
    const std::vector<std::optional<IntervalSet>> one(1);
    const std::vector<std::optional<CriteriaSet>> two(2);
    EXPECT_ANY_THROW(tidy(fits, one, two));
}

TEST(Tidy, CsvHeaderAndNulls) {
    TidyRow r;
    r.dataset_id = "a,b";
    r.model = ModelId::LS5;
    r.quantity = "P_max";
    r.estimate = 2.5;
    r.reason = "no-covariance";
    const std::vector<TidyRow> rows{r};
    const auto csv = tidy_csv(rows);
    const auto raw_lines = csv.substr(0, csv.find('\n'));
    EXPECT_EQ(raw_lines, "dataset_id,model,quantity,estimate,std_error,ci_lower,ci_upper,reason");
    EXPECT_NE(csv.find("\"a,b\",LS5,P_max,2.5,,,,no-covariance"), std::string::npos);
}

// ---------------------------------------------------------------------- JSON

TEST(ResultsJson, ParsesAndCarriesSchema) {
    const auto datasets = example_data();
    std::vector<FitReport> reports;
    for (ModelId id : {ModelId::LS5, ModelId::Ph10}) reports.push_back(analyze_fit(fit_model(datasets[2], id), datasets[2]));
    const auto doc = nlohmann::json::parse(results_json(reports));
    EXPECT_EQ(doc["schema"], std::string(kResultsSchema));
    EXPECT_EQ(doc["schema_version"], kResultsSchemaVersion);
    ASSERT_EQ(doc["fits"].size(), 2u);
    const auto& f = doc["fits"][1];
    EXPECT_EQ(f["model"], "Ph10");
    EXPECT_EQ(f["parameters"].size(), 3u);
    EXPECT_EQ(f["parameters"][0]["name"], "P_max");
    EXPECT_TRUE(f["criteria"].contains("aicc"));
    EXPECT_EQ(f["n"], datasets[2].size());
}

// ------------------------------------------------------------ example data

TEST(ExampleData, ShapeAndClasses) {
    const auto sets = example_data();
    ASSERT_EQ(sets.size(), 8u);
    std::set<std::size_t> sizes;
    for (const auto& d : sets) sizes.insert(d.size());
    EXPECT_EQ(sizes, (std::set<std::size_t>{8, 12, 20, 60}));
    const auto report = format_check(to_raw_table(sets));
    EXPECT_TRUE(report.ok());
    const auto batch = classify_batch(sets);
    EXPECT_EQ(batch.summary.failures, 0u);
    for (std::size_t c : batch.summary.counts) EXPECT_GE(c, 1u);
}

TEST(ExampleData, ShippedFileMatchesEmbeddedCopyAndGenerator) {
    const auto shipped = slurp(std::string(PICURVE_SOURCE_DIR) + "/data/example_incubations.csv");
    ASSERT_FALSE(shipped.empty());
    EXPECT_EQ(std::string(example_data_csv()), shipped);
    EXPECT_EQ(run_capture(std::string("\"") + PICURVE_GENERATOR_PATH + "\""), shipped);
}

TEST(Synthetic, DeterministicStream) {
    NormalStream a(42), b(42), c(43);
    double sum = 0.0, sq = 0.0;
    bool differs = false;
    for (int i = 0; i < 20000; ++i) {
        const double x = a.next();
        EXPECT_EQ(x, b.next());
        if (x != c.next()) differs = true;
        sum += x;
        sq += x * x;
    }
    EXPECT_TRUE(differs);
    EXPECT_NEAR(sum / 20000, 0.0, 0.03);
    EXPECT_NEAR(sq / 20000, 1.0, 0.05);
    const auto truth = ParameterVector(ModelId::LS5, {10, 100});
    const auto grid = linspace(0, 500, 10);
    EXPECT_EQ(make_synthetic("s", truth, grid, 0.1, 7).rate, make_synthetic("s", truth, grid, 0.1, 7).rate);
    EXPECT_EQ(make_synthetic("s", truth, grid, 0.0, 7).rate, evaluate_grid(ModelId::LS5, truth, grid));
}
