#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace picurve {

/// One incubation: paired irradiance / rate observations.
struct Dataset {
    std::string id;
    std::vector<double> irradiance;
    std::vector<double> rate;
    std::string irradiance_unit = "umol photons m-2 s-1";
    std::string rate_unit;
    std::map<std::string, std::string> metadata;

    std::size_t size() const noexcept { return irradiance.size(); }
    double max_irradiance() const;
    double max_rate() const;
};

inline constexpr std::size_t kMinObservations = 5;
inline constexpr std::size_t kMinDistinctIrradiance = 4;

/// Human-readable descriptions of every invariant the dataset breaks.
std::vector<std::string> dataset_violations(const Dataset& data);

/// Throws DataError listing all violations.
void validate_dataset(const Dataset& data);

std::size_t distinct_irradiance_count(const Dataset& data);

}  // namespace picurve
