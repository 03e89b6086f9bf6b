#include "picurve/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "picurve/error.hpp"

namespace picurve {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ParamInfo {
    Param param;
    std::string_view name;
    Domain domain;
};

constexpr ParamInfo kParamInfo[] = {
    {Param::alpha, "alpha", Domain::positive},
    {Param::beta, "beta", Domain::positive},
    {Param::p_max, "P_max", Domain::positive},
    {Param::p_s, "P_s", Domain::positive},
    {Param::i_alpha, "I_alpha", Domain::positive},
    {Param::i_beta, "I_beta", Domain::positive},
    {Param::i_alpha_s, "I_alpha_s", Domain::positive},
    {Param::i_beta_s, "I_beta_s", Domain::positive},
    {Param::theta, "theta", Domain::unit_open},
    {Param::gamma, "gamma", Domain::gamma_shape},
    {Param::theta_beta, "theta_beta", Domain::unit_half},
    {Param::b, "b", Domain::b_shape},
    {Param::respiration, "R", Domain::nonnegative},
};

constexpr std::string_view kModelNames[] = {
    "lm",   "LS1",  "LS2",  "LS3",  "LS4",  "LS5",  "LS6",  "LS7",
    "Ph01", "Ph02", "Ph03", "Ph04", "Ph05", "Ph06", "Ph07", "Ph08",
    "Ph09", "Ph10", "Ph11", "Ph12", "Ph13", "Ph14", "Ph15", "Ph16",
};

std::vector<ModelSpec> build_registry() {
    using P = Param;
    using C = ModelClass;
    const auto sat = C::light_saturated;
    const auto inh = C::photoinhibited;
    const std::map<std::string, double> fixed_gamma{{"gamma", kDoubleTanhGamma}};

    std::vector<ModelSpec> r;
    r.reserve(kModelCount);
    auto add = [&r](ModelId id, ModelClass c, std::vector<Param> roster, std::string ref,
                    std::map<std::string, double> fixed = {}) {
        r.push_back(ModelSpec{id, std::string(to_string(id)), c, std::move(roster),
                              std::move(fixed), std::move(ref), true});
    };

    add(ModelId::lm, C::light_limited, {P::alpha}, "Linear regression (Blackman 1905)");
    add(ModelId::LS1, sat, {P::p_max, P::i_alpha}, "Blackman 1905");
    add(ModelId::LS2, sat, {P::p_max, P::i_alpha}, "Baly 1935");
    add(ModelId::LS3, sat, {P::p_max, P::i_alpha}, "Smith 1936");
    add(ModelId::LS4, sat, {P::p_max, P::i_alpha}, "Webb et al. 1974");
    add(ModelId::LS5, sat, {P::p_max, P::i_alpha}, "Jassby and Platt 1976");
    add(ModelId::LS6, sat, {P::p_max, P::i_alpha, P::theta}, "Prioul and Chartier 1977");
    add(ModelId::LS7, sat, {P::p_max, P::i_alpha, P::gamma}, "Bannister 1979");

    add(ModelId::Ph01, inh, {P::p_s, P::i_alpha_s}, "Steele 1962");
    add(ModelId::Ph02, inh, {P::p_s, P::i_alpha_s, P::i_beta_s}, "Peeters and Eilers 1978");
    add(ModelId::Ph03, inh, {P::p_s, P::i_alpha_s, P::i_beta_s}, "Platt et al. 1981");
    add(ModelId::Ph04, inh, {P::p_s, P::i_alpha_s, P::i_beta_s}, "Neale and Richerson 1987");
    add(ModelId::Ph05, inh, {P::p_s, P::i_alpha_s, P::i_beta_s}, "");
    add(ModelId::Ph06, inh, {P::p_s, P::i_alpha_s, P::i_beta_s}, "");
    add(ModelId::Ph07, inh, {P::p_s, P::i_alpha_s, P::i_beta_s, P::b}, "");
    add(ModelId::Ph08, inh, {P::p_s, P::i_alpha_s, P::i_beta_s, P::theta}, "");
    add(ModelId::Ph09, inh, {P::alpha, P::beta, P::p_max}, "");
    add(ModelId::Ph10, inh, {P::p_max, P::i_alpha, P::i_beta}, "", fixed_gamma);
    add(ModelId::Ph11, inh, {P::p_max, P::i_alpha, P::i_beta, P::gamma}, "");
    add(ModelId::Ph12, inh, {P::p_max, P::i_alpha, P::i_beta}, "", fixed_gamma);
    add(ModelId::Ph13, inh, {P::p_max, P::i_alpha, P::i_beta, P::gamma}, "");
    add(ModelId::Ph14, inh, {P::p_max, P::i_alpha, P::i_beta}, "");
    add(ModelId::Ph15, inh, {P::p_max, P::i_alpha, P::i_beta}, "");
    add(ModelId::Ph16, inh, {P::p_max, P::i_alpha, P::theta, P::theta_beta}, "Fasham and Platt 1983");
    return r;
}

// Non-rectangular hyperbola [(x+1) - sqrt((x+1)^2 - 4 theta x)] / (2 theta),
// rewritten without the cancellation near x = 0.
double nonrect_hyperbola(double x, double theta) {
    const double s = x + 1.0;
    return 2.0 * x / (s + std::sqrt(s * s - 4.0 * theta * x));
}

// tanh[(I_beta / I)^gamma], right limit 1 at I = 0.
double tanh_inhibition(double irradiance, double i_beta, double gamma) {
    if (irradiance == 0.0) return 1.0;
    return std::tanh(std::pow(i_beta / irradiance, gamma));
}

// 1 - exp(-I_beta / I), right limit 1 at I = 0.
double exp_inhibition(double irradiance, double i_beta) {
    if (irradiance == 0.0) return 1.0;
    return -std::expm1(-i_beta / irradiance);
}

double bannister(double irradiance, double i_alpha, double gamma) {
    const double x = irradiance / i_alpha;
    if (x <= 1.0) return x / std::pow(std::pow(x, gamma) + 1.0, 1.0 / gamma);
    return 1.0 / std::pow(1.0 + std::pow(x, -gamma), 1.0 / gamma);
}

void check_value(Param p, double v) {
    if (!std::isfinite(v)) {
        throw InvalidParameters(std::string(to_string(p)) + " is not finite");
    }
    bool ok = true;
    switch (domain_of(p)) {
        case Domain::positive:
        case Domain::gamma_shape: ok = v > 0.0; break;
        case Domain::unit_open: ok = v > 0.0 && v < 1.0; break;
        case Domain::unit_half: ok = v > 0.0 && v <= 1.0; break;
        case Domain::b_shape: ok = v > 1.0; break;
        case Domain::nonnegative: ok = v >= 0.0; break;
    }
    if (!ok) {
        throw InvalidParameters(std::string(to_string(p)) + " = " + std::to_string(v) +
                                " is outside its domain");
    }
}

void check_irradiance(double irradiance) {
    if (!std::isfinite(irradiance)) throw DataError("irradiance is not finite");
    if (irradiance < 0.0) throw DataError("irradiance is negative");
}

void check_model(ModelId id, const ParameterVector& params) {
    if (params.model() != id) {
        throw InvalidParameters("parameters belong to " + std::string(to_string(params.model())) +
                                ", not " + std::string(to_string(id)));
    }
    params.validate();
}

struct ScalarMax {
    double x = 0.0;
    double f = 0.0;
    bool at_upper_bound = false;
};

// Maximizes the gross curve over (0, upper]: log-spaced scan to bracket the
// peak, then golden-section refinement inside the bracket.
ScalarMax maximize_gross(ModelId id, std::span<const double> p, double upper, double abs_tol) {
    constexpr int kScan = 2000;
    const double lower = upper * 1e-9;
    const double ratio = std::pow(upper / lower, 1.0 / (kScan - 1));
    std::vector<double> grid(kScan);
    double x = lower;
    for (int i = 0; i < kScan; ++i, x *= ratio) grid[i] = x;
    grid.back() = upper;

    int best = 0;
    double best_f = -kInf;
    for (int i = 0; i < kScan; ++i) {
        const double f = gross_rate_unchecked(id, p, grid[i]);
        if (!std::isfinite(f)) {
            throw ConvergenceError("non-finite rate while bracketing the maximum of " +
                                   std::string(to_string(id)));
        }
        if (f > best_f) {
            best_f = f;
            best = i;
        }
    }
    if (best == kScan - 1) return {upper, best_f, true};

    double a = best > 0 ? grid[best - 1] : 0.0;
    double b = grid[best + 1];
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = gross_rate_unchecked(id, p, c);
    double fd = gross_rate_unchecked(id, p, d);
    for (int it = 0; it < 500; ++it) {
        if (b - a <= 1e-12 * b) break;
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = gross_rate_unchecked(id, p, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = gross_rate_unchecked(id, p, d);
        }
    }
    ScalarMax out{grid[best], best_f, false};
    if (fc > out.f) out = {c, fc, false};
    if (fd > out.f) out = {d, fd, false};
    // The golden-section values can only improve on the scan; a bracket that
    // lost more than the tolerance means the curve is not unimodal there.
    if (out.f + abs_tol < best_f) {
        throw ConvergenceError("golden-section search lost the maximum of " +
                               std::string(to_string(id)));
    }
    return out;
}

}  // namespace

std::string_view to_string(ModelId id) {
    return kModelNames[static_cast<std::size_t>(id)];
}

std::string_view to_string(ModelClass c) {
    switch (c) {
        case ModelClass::light_limited: return "light-limited";
        case ModelClass::light_saturated: return "light-saturated";
        case ModelClass::photoinhibited: return "photoinhibited";
    }
    return "unknown";
}

std::string_view to_string(Param p) {
    return kParamInfo[static_cast<std::size_t>(p)].name;
}

Domain domain_of(Param p) {
    return kParamInfo[static_cast<std::size_t>(p)].domain;
}

ModelId parse_model_id(std::string_view name) {
    for (std::size_t i = 0; i < kModelCount; ++i) {
        if (kModelNames[i] == name) return static_cast<ModelId>(i);
    }
    throw InvalidParameters("unknown model id '" + std::string(name) + "'");
}

std::optional<Param> parse_param(std::string_view name) {
    for (const auto& info : kParamInfo) {
        if (info.name == name) return info.param;
    }
    return std::nullopt;
}

const std::vector<ModelSpec>& list_models() {
    static const std::vector<ModelSpec> registry = build_registry();
    return registry;
}

const ModelSpec& model_spec(ModelId id) {
    const auto index = static_cast<std::size_t>(id);
    if (index >= kModelCount) throw InvalidParameters("unknown model id");
    return list_models()[index];
}

// ---------------------------------------------------------------------------
// ParameterVector

ParameterVector::ParameterVector(ModelId id, std::vector<double> values, bool with_respiration)
    : model_(id), with_respiration_(with_respiration), values_(std::move(values)) {
    const std::size_t expected = model_spec(id).parameters.size() + (with_respiration ? 1 : 0);
    if (values_.size() != expected) {
        throw InvalidParameters(std::string(to_string(id)) + " expects " +
                                std::to_string(expected) + " values, got " +
                                std::to_string(values_.size()));
    }
}

ParameterVector ParameterVector::from_map(ModelId id, const std::map<std::string, double>& named) {
    const auto& roster = model_spec(id).parameters;
    const bool with_r = named.contains("R");
    if (named.size() != roster.size() + (with_r ? 1 : 0)) {
        throw InvalidParameters("parameter names do not match the roster of " +
                                std::string(to_string(id)));
    }
    std::vector<double> values;
    values.reserve(named.size());
    for (Param p : roster) {
        auto it = named.find(std::string(to_string(p)));
        if (it == named.end()) {
            throw InvalidParameters(std::string(to_string(id)) + " requires parameter " +
                                    std::string(to_string(p)));
        }
        values.push_back(it->second);
    }
    if (with_r) values.push_back(named.at("R"));
    return ParameterVector(id, std::move(values), with_r);
}

ParameterVector ParameterVector::from_pairs(ModelId id,
                                            std::initializer_list<std::pair<Param, double>> values) {
    std::map<std::string, double> named;
    for (const auto& [p, v] : values) named.emplace(std::string(to_string(p)), v);
    return from_map(id, named);
}

std::optional<double> ParameterVector::respiration() const {
    if (!with_respiration_) return std::nullopt;
    return values_.back();
}

std::vector<Param> ParameterVector::names() const {
    std::vector<Param> out = model_spec(model_).parameters;
    if (with_respiration_) out.push_back(Param::respiration);
    return out;
}

bool ParameterVector::contains(Param p) const {
    if (p == Param::respiration) return with_respiration_;
    const auto& roster = model_spec(model_).parameters;
    return std::find(roster.begin(), roster.end(), p) != roster.end();
}

double ParameterVector::get(Param p) const {
    if (p == Param::respiration && with_respiration_) return values_.back();
    const auto& roster = model_spec(model_).parameters;
    const auto it = std::find(roster.begin(), roster.end(), p);
    if (it == roster.end()) {
        throw InvalidParameters(std::string(to_string(model_)) + " has no parameter " +
                                std::string(to_string(p)));
    }
    return values_[static_cast<std::size_t>(it - roster.begin())];
}

double ParameterVector::get(std::string_view name) const {
    const auto p = parse_param(name);
    if (!p) throw InvalidParameters("unknown parameter name '" + std::string(name) + "'");
    return get(*p);
}

void ParameterVector::set(Param p, double value) {
    if (p == Param::respiration && with_respiration_) {
        values_.back() = value;
        return;
    }
    const auto& roster = model_spec(model_).parameters;
    const auto it = std::find(roster.begin(), roster.end(), p);
    if (it == roster.end()) {
        throw InvalidParameters(std::string(to_string(model_)) + " has no parameter " +
                                std::string(to_string(p)));
    }
    values_[static_cast<std::size_t>(it - roster.begin())] = value;
}

std::map<std::string, double> ParameterVector::to_map() const {
    std::map<std::string, double> out;
    const auto params = names();
    for (std::size_t i = 0; i < params.size(); ++i) {
        out.emplace(std::string(to_string(params[i])), values_[i]);
    }
    return out;
}

void ParameterVector::validate() const {
    const auto params = names();
    if (params.size() != values_.size()) {
        throw InvalidParameters("parameter vector size does not match the roster");
    }
    for (std::size_t i = 0; i < params.size(); ++i) check_value(params[i], values_[i]);
}

// ---------------------------------------------------------------------------
// Evaluation

double gross_rate_unchecked(ModelId id, std::span<const double> p, double irradiance) {
    const double I = irradiance;
    switch (id) {
        case ModelId::lm: return p[0] * I;
        case ModelId::LS1: return I >= p[1] ? p[0] : p[0] * I / p[1];
        case ModelId::LS2: return p[0] * I / (I + p[1]);
        case ModelId::LS3: return I == 0.0 ? 0.0 : p[0] * I / std::hypot(I, p[1]);
        case ModelId::LS4: return -p[0] * std::expm1(-I / p[1]);
        case ModelId::LS5: return p[0] * std::tanh(I / p[1]);
        case ModelId::LS6: return p[0] * nonrect_hyperbola(I / p[1], p[2]);
        case ModelId::LS7: return p[0] * bannister(I, p[1], p[2]);

        case ModelId::Ph01: {
            const double x = I / p[1];
            return p[0] * x * std::exp(1.0 - x);
        }
        case ModelId::Ph02: {
            const double x = I / p[1];
            return p[0] * x / (I * I / (p[1] * p[2]) + x + 1.0);
        }
        case ModelId::Ph03: return -p[0] * std::expm1(-I / p[1]) * std::exp(-I / p[2]);
        case ModelId::Ph04: return p[0] * std::tanh(I / p[1]) * std::exp(-I / p[2]);
        case ModelId::Ph05: return p[0] * I / (I + p[1]) * std::exp(-I / p[2]);
        case ModelId::Ph06:
            return I == 0.0 ? 0.0 : p[0] * I / std::hypot(I, p[1]) * std::exp(-I / p[2]);
        case ModelId::Ph07:
            return p[0] * I / std::pow(I + p[1], 1.0 / p[3]) * std::exp(-I / p[2]);
        case ModelId::Ph08:
            return p[0] * nonrect_hyperbola(I / p[1], p[3]) * std::exp(-I / p[2]);
        case ModelId::Ph09: {
            // alpha, beta, P_max; the declining branch continues the plateau.
            const double rise = p[0] * I;
            const double fall = 2.0 * p[2] - p[1] * I;
            return std::max(std::min({rise, p[2], fall}), -p[2]);
        }
        case ModelId::Ph10:
            return p[0] * std::tanh(I / p[1]) * tanh_inhibition(I, p[2], kDoubleTanhGamma);
        case ModelId::Ph11:
            return p[0] * std::tanh(I / p[1]) * tanh_inhibition(I, p[2], p[3]);
        case ModelId::Ph12:
            return -p[0] * std::expm1(-I / p[1]) * tanh_inhibition(I, p[2], kDoubleTanhGamma);
        case ModelId::Ph13:
            return -p[0] * std::expm1(-I / p[1]) * tanh_inhibition(I, p[2], p[3]);
        case ModelId::Ph14: return p[0] * std::tanh(I / p[1]) * exp_inhibition(I, p[2]);
        case ModelId::Ph15: return -p[0] * std::expm1(-I / p[1]) * exp_inhibition(I, p[2]);
        case ModelId::Ph16: {
            // P_max / (2 theta) [1 + theta_b x - sqrt(theta_b x^2 - 4 theta x + 1)]
            const double x = I / p[1];
            const double theta = p[2];
            const double theta_b = p[3];
            const double u = theta_b * x * x - 4.0 * theta * x;
            if (1.0 + u < 0.0) return std::numeric_limits<double>::quiet_NaN();
            const double bracket = theta_b * x - u / (1.0 + std::sqrt(1.0 + u));
            return p[0] / (2.0 * theta) * bracket;
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double evaluate(ModelId id, const ParameterVector& params, double irradiance) {
    check_model(id, params);
    check_irradiance(irradiance);
    const double gross = gross_rate_unchecked(id, params.values(), irradiance);
    if (std::isnan(gross)) {
        throw InvalidParameters(std::string(to_string(id)) +
                                " is undefined at I = " + std::to_string(irradiance) +
                                " (negative radicand)");
    }
    const auto r = params.respiration();
    return r ? gross - *r : gross;
}

namespace {

std::vector<double> evaluate_grid_impl(ModelId id, const ParameterVector& params,
                                       std::span<const double> irradiances, bool parallel) {
    check_model(id, params);
    for (std::size_t i = 0; i < irradiances.size(); ++i) {
        try {
            check_irradiance(irradiances[i]);
        } catch (const DataError& e) {
            throw DataError(std::string(e.what()) + " at index " + std::to_string(i));
        }
    }
    const double r = params.respiration().value_or(0.0);
    const auto p = params.values();
    const auto n = static_cast<std::ptrdiff_t>(irradiances.size());
    std::vector<double> out(irradiances.size());
#pragma omp parallel for schedule(static) if (parallel && n > 4096)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[i] = gross_rate_unchecked(id, p, irradiances[i]) - r;
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (std::isnan(out[i])) {
            throw InvalidParameters(std::string(to_string(id)) + " is undefined at index " +
                                    std::to_string(i) + " (negative radicand)");
        }
    }
    return out;
}

}  // namespace

std::vector<double> evaluate_grid(ModelId id, const ParameterVector& params,
                                  std::span<const double> irradiances) {
    return evaluate_grid_impl(id, params, irradiances, true);
}

namespace serial {
std::vector<double> evaluate_grid(ModelId id, const ParameterVector& params,
                                  std::span<const double> irradiances) {
    return evaluate_grid_impl(id, params, irradiances, false);
}
}  // namespace serial

// ---------------------------------------------------------------------------
// Derived quantities

std::optional<ModelId> reduction_partner(ModelId id) {
    switch (id) {
        case ModelId::Ph03: return ModelId::LS4;
        case ModelId::Ph04: return ModelId::LS5;
        case ModelId::Ph05: return ModelId::LS2;
        case ModelId::Ph06: return ModelId::LS3;
        case ModelId::Ph08: return ModelId::LS6;
        case ModelId::Ph10:
        case ModelId::Ph11:
        case ModelId::Ph14: return ModelId::LS5;
        case ModelId::Ph12:
        case ModelId::Ph13:
        case ModelId::Ph15: return ModelId::LS4;
        default: break;
    }
    if (static_cast<std::size_t>(id) >= kModelCount) throw InvalidParameters("unknown model id");
    return std::nullopt;
}

std::optional<Param> inhibition_scale_param(ModelId id) {
    const auto& roster = model_spec(id).parameters;
    for (Param p : roster) {
        if (p == Param::i_beta || p == Param::i_beta_s) return p;
    }
    return std::nullopt;
}

double initial_slope(ModelId id, const ParameterVector& params) {
    check_model(id, params);
    const auto p = params.values();
    switch (id) {
        case ModelId::lm:
        case ModelId::Ph09: return p[0];
        case ModelId::Ph01: return std::exp(1.0) * p[0] / p[1];
        case ModelId::Ph07: return p[0] / std::pow(p[1], 1.0 / p[3]);
        case ModelId::Ph16: return p[0] * (p[3] + 2.0 * p[2]) / (2.0 * p[2] * p[1]);
        default: return p[0] / p[1];
    }
}

DerivedQuantities derive_quantities(ModelId id, const ParameterVector& params) {
    check_model(id, params);
    const auto p = params.values();
    DerivedQuantities d;
    const auto& spec = model_spec(id);

    switch (id) {
        case ModelId::lm:
            d.alpha = p[0];
            d.p_max = kInf;
            d.i_opt = kInf;
            d.i_beta = kInf;
            return d;
        case ModelId::Ph09:
            d.alpha = p[0];
            d.p_max = p[2];
            d.i_beta = p[2] / p[1];
            // First irradiance at which the plateau (or the peak) is reached.
            d.i_opt = std::min(p[2] / p[0], p[2] / p[1]);
            d.p_max = gross_rate_unchecked(id, p, d.i_opt);
            return d;
        default: break;
    }

    if (spec.model_class == ModelClass::light_saturated) {
        d.p_max = p[0];
        d.alpha = p[0] / p[1];
        d.i_beta = kInf;
        d.i_opt = id == ModelId::LS1 ? p[1] : kInf;
        return d;
    }

    if (params.contains(Param::p_s)) {
        // Ph01..Ph08: P_max is the numerical maximum of the gross curve.
        const double p_s = p[0];
        const double i_alpha_s = p[1];
        const double i_beta_s = params.contains(Param::i_beta_s) ? p[2] : 0.0;
        const double upper = 50.0 * std::max(i_alpha_s, i_beta_s);
        const auto peak = maximize_gross(id, p, upper, 1e-8 * p_s);
        if (peak.at_upper_bound) {
            throw ConvergenceError("maximum of " + std::string(to_string(id)) +
                                   " not bracketed within (0, " + std::to_string(upper) + "]");
        }
        d.p_max = peak.f;
        d.i_opt = peak.x;
        d.alpha = p_s / i_alpha_s;
        d.i_beta = params.contains(Param::i_beta_s) ? d.p_max * i_beta_s / p_s : kInf;
        return d;
    }

    // Ph10..Ph16: P_max is a parameter, I_opt is located numerically.
    d.p_max = p[0];
    d.alpha = p[0] / p[1];
    double upper = 50.0 * p[1];
    if (params.contains(Param::i_beta)) {
        d.i_beta = params.get(Param::i_beta);
        upper = 50.0 * std::max(p[1], d.i_beta);
    } else {
        d.i_beta = kInf;
    }
    const auto peak = maximize_gross(id, p, upper, 1e-8 * p[0]);
    d.i_opt = peak.at_upper_bound ? kInf : peak.x;
    return d;
}

}  // namespace picurve
