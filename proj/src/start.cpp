#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "picurve/error.hpp"
#include "picurve/fit.hpp"

namespace picurve {

namespace {

struct Line {
    double slope = 0.0;
    double intercept = 0.0;
};

// Ordinary least-squares line; needs at least two distinct x values.
Line fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    Line line;
    line.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    line.intercept = my - line.slope * mx;
    return line;
}

}  // namespace

ParameterVector suggest_start(ModelId id, const Dataset& data, bool respiration) {
    if (data.irradiance.size() != data.rate.size() || data.size() == 0) {
        throw DataError("dataset '" + data.id + "' has no usable observations");
    }
    const std::size_t n = data.size();
    const std::size_t m = std::max<std::size_t>(3, std::min<std::size_t>(4, n / 3));

    const std::set<double> levels(data.irradiance.begin(), data.irradiance.end());
    if (levels.size() < m) {
        throw DataError("need " + std::to_string(m) + " distinct low-light irradiance levels, found " +
                        std::to_string(levels.size()));
    }
    const double low_cut = *std::next(levels.begin(), static_cast<std::ptrdiff_t>(m - 1));

    std::vector<double> low_i, low_p;
    for (std::size_t i = 0; i < n; ++i) {
        if (data.irradiance[i] <= low_cut) {
            low_i.push_back(data.irradiance[i]);
            low_p.push_back(data.rate[i]);
        }
    }
    const Line low = fit_line(low_i, low_p);

    const double max_i = *levels.rbegin();
    double max_p = data.rate[0];
    double i_star = data.irradiance[0];
    double max_abs_p = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = data.rate[i];
        max_abs_p = std::max(max_abs_p, std::abs(p));
        if (p > max_p || (p == max_p && data.irradiance[i] < i_star)) {
            max_p = p;
            i_star = data.irradiance[i];
        }
    }

    const double alpha_floor = 1e-6 * std::max(max_abs_p, 1e-12) / max_i;
    const double alpha0 = std::max(low.slope, alpha_floor);
    const double r0 = respiration ? std::max(0.0, -low.intercept) : 0.0;
    double p_max0 = max_p + r0;
    if (!(p_max0 > 0.0)) p_max0 = std::max(alpha0 * max_i, 1e-12);
    const double i_alpha0 = p_max0 / alpha0;

    // Decline past the peak.
    std::vector<double> hi_i, hi_p;
    for (std::size_t i = 0; i < n; ++i) {
        if (data.irradiance[i] > i_star) {
            hi_i.push_back(data.irradiance[i]);
            hi_p.push_back(data.rate[i]);
        }
    }
    double decline = 0.0;
    const std::set<double> hi_levels(hi_i.begin(), hi_i.end());
    if (hi_levels.size() >= 2) {
        decline = fit_line(hi_i, hi_p).slope;
    } else if (hi_levels.size() == 1) {
        double mean_p = 0.0;
        for (double p : hi_p) mean_p += p;
        mean_p /= static_cast<double>(hi_p.size());
        decline = (mean_p - max_p) / (hi_i.front() - i_star);
    }
    double beta0 = 0.0;
    double i_beta0 = 0.0;
    if (decline < 0.0) {
        beta0 = -decline;
        i_beta0 = p_max0 / beta0;
    } else {
        i_beta0 = 3.0 * max_i;
        beta0 = p_max0 / i_beta0;
    }

    const double p_s0 = 1.2 * p_max0;
    const double i_alpha_s0 = p_s0 / alpha0;
    const double i_beta_s0 = i_beta0;

    const auto& roster = model_spec(id).parameters;
    std::vector<double> values;
    values.reserve(roster.size() + 1);
    for (Param p : roster) {
        double v = 0.0;
        switch (p) {
            case Param::alpha: v = alpha0; break;
            case Param::beta: v = beta0; break;
            case Param::p_max: v = p_max0; break;
            case Param::p_s: v = p_s0; break;
            case Param::i_alpha: v = i_alpha0; break;
            case Param::i_beta: v = i_beta0; break;
            case Param::i_alpha_s: v = i_alpha_s0; break;
            case Param::i_beta_s: v = i_beta_s0; break;
            // Ph16 needs theta_beta >= 4 theta^2 for a real square root.
            case Param::theta: v = id == ModelId::Ph16 ? 0.25 : 0.5; break;
            case Param::gamma: v = id == ModelId::LS7 ? 2.0 : kDoubleTanhGamma; break;
            case Param::theta_beta: v = 0.5; break;
            case Param::b: v = 2.0; break;
            case Param::respiration: v = r0; break;
        }
        values.push_back(v);
    }
    if (respiration) values.push_back(r0);
    return ParameterVector(id, std::move(values), respiration);
}

}  // namespace picurve
