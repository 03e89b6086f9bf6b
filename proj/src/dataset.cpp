#include "picurve/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "picurve/error.hpp"

namespace picurve {

double Dataset::max_irradiance() const {
    if (irradiance.empty()) throw DataError("dataset '" + id + "' is empty");
    return *std::max_element(irradiance.begin(), irradiance.end());
}

double Dataset::max_rate() const {
    if (rate.empty()) throw DataError("dataset '" + id + "' is empty");
    return *std::max_element(rate.begin(), rate.end());
}

std::size_t distinct_irradiance_count(const Dataset& data) {
    return std::set<double>(data.irradiance.begin(), data.irradiance.end()).size();
}

std::vector<std::string> dataset_violations(const Dataset& data) {
    std::vector<std::string> out;
    if (data.irradiance.size() != data.rate.size()) {
        out.push_back("irradiance and rate lengths differ (" +
                      std::to_string(data.irradiance.size()) + " vs " +
                      std::to_string(data.rate.size()) + ")");
    }
    const std::size_t n = std::min(data.irradiance.size(), data.rate.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = std::to_string(i + 1);
        if (!std::isfinite(data.irradiance[i])) out.push_back("non-finite irradiance, row " + row);
        else if (data.irradiance[i] < 0.0) out.push_back("negative irradiance, row " + row);
        if (!std::isfinite(data.rate[i])) out.push_back("non-finite rate, row " + row);
    }
    if (data.size() < kMinObservations) {
        out.push_back("n < 5 (n = " + std::to_string(data.size()) + ")");
    }
    const auto distinct = distinct_irradiance_count(data);
    if (distinct < kMinDistinctIrradiance) {
        out.push_back("fewer than 4 distinct irradiance values (" + std::to_string(distinct) + ")");
    }
    return out;
}

void validate_dataset(const Dataset& data) {
    const auto problems = dataset_violations(data);
    if (problems.empty()) return;
    std::string msg = "dataset '" + data.id + "' is invalid:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw DataError(msg);
}

}  // namespace picurve
