#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "picurve/data_io.hpp"
#include "picurve/dataset.hpp"
#include "picurve/models.hpp"

namespace testing_support {

using picurve::ModelId;
using picurve::Param;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    if (n > 1) v.back() = hi;
    return v;
}

inline std::vector<ModelId> all_models() {
    std::vector<ModelId> ids;
    for (const auto& spec : picurve::list_models()) ids.push_back(spec.id);
    return ids;
}

/// Random valid parameters:
///   P_max, P_s in [2, 20]; I_alpha, I_alpha_s in [50, 400]; I_beta, I_beta_s in [400, 3000];
///   alpha in [0.02, 0.2], beta in [0.1, 0.5] alpha; theta in [0.05, 0.95]
///   (Ph16: [0.05, 0.45] with theta_beta in [4 theta^2, 1]); gamma in [1.2, 5]; b in [1.2, 3];
///   R in [0, 2].
inline picurve::ParameterVector random_params(ModelId id, std::mt19937_64& rng, bool respiration = false) {
    const auto& roster = picurve::model_spec(id).parameters;
    std::vector<double> v;
    double alpha = 0.0;
    double theta = 0.0;
    for (Param p : roster) {
        double x = 0.0;
        switch (p) {
            case Param::p_max:
            case Param::p_s: x = uniform(rng, 2.0, 20.0); break;
            case Param::i_alpha:
            case Param::i_alpha_s: x = uniform(rng, 50.0, 400.0); break;
            case Param::i_beta:
            case Param::i_beta_s: x = uniform(rng, 400.0, 3000.0); break;
            case Param::alpha: x = alpha = uniform(rng, 0.02, 0.2); break;
            case Param::beta: x = alpha * uniform(rng, 0.1, 0.5); break;
            case Param::theta:
                x = theta = (id == ModelId::Ph16) ? uniform(rng, 0.05, 0.45) : uniform(rng, 0.05, 0.95);
                break;
            case Param::theta_beta: x = uniform(rng, 4.0 * theta * theta, 1.0); break;
            case Param::gamma: x = uniform(rng, 1.2, 5.0); break;
            case Param::b: x = uniform(rng, 1.2, 3.0); break;
            case Param::respiration: break;
        }
        v.push_back(x);
    }
    if (respiration) v.push_back(uniform(rng, 0.0, 2.0));
    return picurve::ParameterVector(id, v, respiration);
}

inline picurve::Dataset noiseless(std::string id, const picurve::ParameterVector& truth,
                                  std::vector<double> irradiance) {
    picurve::Dataset d;
    d.id = std::move(id);
    d.rate = picurve::evaluate_grid(truth.model(), truth, irradiance);
    d.irradiance = std::move(irradiance);
    return d;
}

/// The inhibition scale pushed to its no-inhibition limit.
inline constexpr double kNoInhibition = 1e12;

}  // namespace testing_support
