#pragma once

// Registry and evaluator for the 24 photosynthesis-irradiance formulations:
// one light-limited (lm), seven light-saturated (LS1..LS7) and sixteen
// photoinhibition models (Ph01..Ph16).
//
// Every model returns a gross rate; when a ParameterVector carries a
// respiration term R the net rate gross(I) - R is returned instead.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace picurve {

enum class ModelId : std::uint8_t {
    lm,
    LS1, LS2, LS3, LS4, LS5, LS6, LS7,
    Ph01, Ph02, Ph03, Ph04, Ph05, Ph06, Ph07, Ph08,
    Ph09, Ph10, Ph11, Ph12, Ph13, Ph14, Ph15, Ph16,
};

inline constexpr std::size_t kModelCount = 24;

enum class ModelClass : std::uint8_t { light_limited, light_saturated, photoinhibited };

enum class Param : std::uint8_t {
    alpha,       // initial slope
    beta,        // photoinhibition rate
    p_max,
    p_s,         // theoretical maximum of Ph01..Ph08
    i_alpha,     // P_max / alpha
    i_beta,      // P_max / beta
    i_alpha_s,   // P_s / alpha
    i_beta_s,    // P_s / beta
    theta,
    gamma,
    theta_beta,
    b,
    respiration, // R, dark respiration
};

/// Parameter domains; they drive validation and the optimizer transforms.
enum class Domain : std::uint8_t {
    positive,      // (0, inf)
    unit_open,     // (0, 1)
    unit_half,     // (0, 1]
    gamma_shape,   // (0, inf) for evaluation, (1, 10) for fitting
    b_shape,       // (1, inf)
    nonnegative,   // [0, inf)
};

/// cosh^2(1), the fixed shape exponent of Ph10 and Ph12.
inline const double kDoubleTanhGamma = std::cosh(1.0) * std::cosh(1.0);

std::string_view to_string(ModelId id);
std::string_view to_string(ModelClass c);
std::string_view to_string(Param p);
Domain domain_of(Param p);

/// Throws InvalidParameters for an unknown name.
ModelId parse_model_id(std::string_view name);
std::optional<Param> parse_param(std::string_view name);

struct ModelSpec {
    ModelId id;
    std::string name;
    ModelClass model_class;
    std::vector<Param> parameters;  // roster without R
    std::map<std::string, double> fixed_constants;
    std::string reference;  // literature source; empty for formulations without one
    bool supports_respiration = true;
};

/// Named parameter values for one model, in natural (constrained) units.
/// The values are stored in roster order, followed by R when respiration is on.
class ParameterVector {
public:
    ParameterVector() = default;

    /// Throws InvalidParameters when the size does not match the roster.
    ParameterVector(ModelId id, std::vector<double> values, bool with_respiration = false);

    /// Build from name/value pairs; keys must match the roster exactly
    /// (plus "R" when respiration is wanted).
    static ParameterVector from_map(ModelId id, const std::map<std::string, double>& named);
    static ParameterVector from_pairs(ModelId id,
                                      std::initializer_list<std::pair<Param, double>> values);

    ModelId model() const noexcept { return model_; }
    bool has_respiration() const noexcept { return with_respiration_; }
    std::optional<double> respiration() const;

    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    /// Roster plus R, in storage order.
    std::vector<Param> names() const;

    double get(Param p) const;
    double get(std::string_view name) const;
    bool contains(Param p) const;
    void set(Param p, double value);

    std::map<std::string, double> to_map() const;

    /// Throws InvalidParameters on non-finite values or domain violations.
    void validate() const;

    friend bool operator==(const ParameterVector&, const ParameterVector&) = default;

private:
    ModelId model_ = ModelId::lm;
    bool with_respiration_ = false;
    std::vector<double> values_;
};

/// Quantities derived from a fitted parameter set.
struct DerivedQuantities {
    double p_max = 0.0;   // maximum realized gross rate
    double i_beta = 0.0;  // P_max / beta, +inf when there is no inhibition rate
    double alpha = 0.0;   // initial slope
    double i_opt = 0.0;   // irradiance of maximum gross photosynthesis

    friend bool operator==(const DerivedQuantities&, const DerivedQuantities&) = default;
};

/// All 24 specs in the order lm, LS1..LS7, Ph01..Ph16.
const std::vector<ModelSpec>& list_models();
const ModelSpec& model_spec(ModelId id);

double evaluate(ModelId id, const ParameterVector& params, double irradiance);
std::vector<double> evaluate_grid(ModelId id, const ParameterVector& params,
                                  std::span<const double> irradiances);

/// Gross rate without validation; `p` holds the roster values in order.
/// Used by tight optimizer loops that already validated the parameters.
double gross_rate_unchecked(ModelId id, std::span<const double> p, double irradiance);

DerivedQuantities derive_quantities(ModelId id, const ParameterVector& params);

/// The light-saturated model reached when the inhibition scale goes to infinity.
std::optional<ModelId> reduction_partner(ModelId id);

/// The parameter that carries the inhibition scale (I_beta or I_beta^s), if any.
std::optional<Param> inhibition_scale_param(ModelId id);

/// Analytic slope of the gross curve at I = 0+ for piecewise-free models.
double initial_slope(ModelId id, const ParameterVector& params);

namespace serial {
std::vector<double> evaluate_grid(ModelId id, const ParameterVector& params,
                                  std::span<const double> irradiances);
}  // namespace serial

}  // namespace picurve
