#pragma once

// CSV ingestion and validation, high-resolution grids, tidy output tables,
// the JSON results document, and the bundled example incubations.
//
// Input CSV layout: a header containing `pi_information,I,P` (any order,
// extra columns are kept as per-dataset metadata), one observation per row.
// CRLF line endings and a UTF-8 byte-order mark are accepted; numbers use a
// decimal point.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "picurve/dataset.hpp"
#include "picurve/fit.hpp"
#include "picurve/inference.hpp"

namespace picurve {

struct RawRow {
    std::size_t row = 0;  // line in the source file; the header is line 1
    std::string experiment;
    std::string irradiance;
    std::string rate;
    std::vector<std::string> extra;
};

struct RawTable {
    std::string source;
    std::vector<std::string> extra_columns;
    std::vector<RawRow> rows;
};

struct Violation {
    std::size_t row = 0;  // 0 for dataset-level problems
    std::string experiment;
    std::string message;
};

struct FormatReport {
    std::vector<Dataset> datasets;  // only the experiments that passed
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }
};

/// Throws DataError when required columns are missing or the input is unreadable.
RawTable load_csv(const std::filesystem::path& path);
RawTable parse_csv(std::istream& in, std::string source = "<stream>");
RawTable parse_csv(std::string_view text, std::string source = "<memory>");

/// Groups rows by experiment id (first-appearance order) and reports every
/// violation with its row number. Never throws for bad data.
FormatReport format_check(const RawTable& raw);

/// Inverse of format_check for validated datasets; numbers use 17 significant digits.
RawTable to_raw_table(std::span<const Dataset> datasets);
std::string write_csv(std::span<const Dataset> datasets);
std::string format_number(double value);

/// Quotes a CSV field when it contains a comma, quote or line break.
std::string csv_escape(std::string_view field);

/// m equally spaced irradiances from 0 to max(I), both ends included.
std::vector<double> high_res_grid(const Dataset& data, std::size_t m = 200);

struct TidyRow {
    std::string dataset_id;
    ModelId model = ModelId::lm;
    std::string quantity;
    std::optional<double> estimate;
    std::optional<double> std_error;
    std::optional<double> ci_lower;
    std::optional<double> ci_upper;
    std::string reason;  // why a field is null; empty when complete
};

/// Statistic rows appended after the parameter rows of every fit, in this order.
inline constexpr std::string_view kTidyStatistics[] = {"sse", "r2", "adj_r2", "aic",
                                                       "aicc", "bic", "converged"};

/// Long-format rows ordered by (dataset, model, quantity). `intervals` and
/// `criteria` run parallel to `fits`; nullopt marks diagnostics that could not
/// be formed.
std::vector<TidyRow> tidy(std::span<const FitResult> fits,
                          std::span<const std::optional<IntervalSet>> intervals,
                          std::span<const std::optional<CriteriaSet>> criteria);

std::string tidy_csv(std::span<const TidyRow> rows);

/// Everything a report needs about one fit.
struct FitReport {
    FitResult fit;
    std::optional<Covariance> covariance;
    std::optional<IntervalSet> intervals;
    std::optional<CriteriaSet> criteria;
    std::string diagnostics_error;
};

/// Runs info_matrix -> covariance -> intervals and the criteria, keeping any
/// failure as text instead of throwing.
FitReport analyze_fit(FitResult fit, const Dataset& data, double level = 0.95);

inline constexpr std::string_view kResultsSchema = "picurve.results";
inline constexpr int kResultsSchemaVersion = 1;

/// JSON document with one object per fit (see docs/results-schema.md).
std::string results_json(std::span<const FitReport> reports);

/// Adds Gaussian noise (standard deviation `sigma`) to a model curve.
/// Deterministic and portable for a given seed.
Dataset make_synthetic(std::string id, const ParameterVector& truth,
                       std::span<const double> irradiance, double sigma, std::uint64_t seed);

/// Portable standard-normal stream (Box-Muller over 53-bit uniforms).
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed);
    double next();

private:
    std::uint64_t state_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
    double uniform();
};

/// The eight bundled synthetic incubations (data/example_incubations.csv).
std::vector<Dataset> example_data();
std::string_view example_data_csv();

}  // namespace picurve
