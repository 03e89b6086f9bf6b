#include "picurve/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "picurve/data_io.hpp"
#include "picurve/error.hpp"
#include "picurve/models.hpp"

namespace picurve {

namespace {

constexpr const char* kFont = "font-family=\"sans-serif\" font-size=\"12\"";
constexpr const char* kCurveColor = "#1f3a93";
constexpr const char* kBandColor = "#666666";

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s = buf;
    if (s == "-0.00") s = "0.00";
    return s;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

std::string header(int width, int height) {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " +
           std::to_string(height) + "\">\n<rect x=\"0\" y=\"0\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\" fill=\"white\"/>\n";
}

std::string text(double x, double y, std::string_view s, std::string_view anchor = "middle",
                 std::string_view cls = "label") {
    return "<text class=\"" + std::string(cls) + "\" x=\"" + px(x) + "\" y=\"" + px(y) +
           "\" text-anchor=\"" + std::string(anchor) + "\" " + kFont + ">" + escape(s) + "</text>\n";
}

// Maps data coordinates into a pixel rectangle (y grows downwards in SVG).
struct Frame {
    double left, top, width, height;
    double x0, x1, y0, y1;

    double sx(double x) const { return left + (x - x0) / (x1 - x0) * width; }
    double sy(double y) const { return top + height - (y - y0) / (y1 - y0) * height; }
};

// Non-finite samples break the line into separate subpaths.
std::string polyline_path(const Frame& f, std::span<const double> xs, std::span<const double> ys) {
    std::string d;
    bool pen_down = false;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
            pen_down = false;
            continue;
        }
        if (!d.empty()) d += " ";
        d += (pen_down ? "L" : "M") + px(f.sx(xs[i])) + " " + px(f.sy(ys[i]));
        pen_down = true;
    }
    return d;
}

// evaluate_grid, with NaN where a fitted curve is undefined.
std::vector<double> curve_samples(const FitResult& fit, std::span<const double> grid) {
    try {
        return evaluate_grid(fit.model, fit.params, grid);
    } catch (const InvalidParameters&) {
        std::vector<double> out(grid.size());
        for (std::size_t j = 0; j < grid.size(); ++j) {
            try {
                out[j] = evaluate(fit.model, fit.params, grid[j]);
            } catch (const InvalidParameters&) {
                out[j] = std::numeric_limits<double>::quiet_NaN();
            }
        }
        return out;
    }
}

std::string axes(const Frame& f, std::string_view x_label, std::string_view y_label, bool x_ticks = true) {
    std::string out;
    const double bottom = f.top + f.height;
    out += "<line class=\"axis\" x1=\"" + px(f.left) + "\" y1=\"" + px(bottom) + "\" x2=\"" +
           px(f.left + f.width) + "\" y2=\"" + px(bottom) + "\" stroke=\"black\"/>\n";
    out += "<line class=\"axis\" x1=\"" + px(f.left) + "\" y1=\"" + px(f.top) + "\" x2=\"" + px(f.left) +
           "\" y2=\"" + px(bottom) + "\" stroke=\"black\"/>\n";
    constexpr int kTicks = 5;
    for (int t = 0; t <= kTicks; ++t) {
        const double xv = f.x0 + (f.x1 - f.x0) * t / kTicks;
        const double yv = f.y0 + (f.y1 - f.y0) * t / kTicks;
        if (x_ticks) out += text(f.sx(xv), bottom + 16, tick(xv), "middle", "tick");
        out += text(f.left - 6, f.sy(yv) + 4, tick(yv), "end", "tick");
    }
    out += text(f.left + f.width / 2, bottom + 36, x_label);
    out += "<text class=\"label\" x=\"0\" y=\"0\" text-anchor=\"middle\" " + std::string(kFont) +
           " transform=\"translate(" + px(f.left - 48) + " " + px(f.top + f.height / 2) +
           ") rotate(-90)\">" + escape(y_label) + "</text>\n";
    return out;
}

double normalizer(double max_value) {
    return (std::isfinite(max_value) && max_value > 0.0) ? max_value : 1.0;
}

double clamp_unit(double v) {
    if (std::isnan(v)) return v;
    if (std::isinf(v)) return v > 0 ? kNormalizedMargin : 0.0;
    return std::clamp(v, 0.0, kNormalizedMargin);
}

}  // namespace

void PlotSpec::validate() const {
    if (width <= 0 || height <= 0) throw InvalidParameters("plot dimensions must be positive");
}

std::string round_half_even(double value, int decimals) {
    if (std::isnan(value)) return "NA";
    // glibc prints the exact binary value, so only genuine ties reach the
    // round-to-nearest-even rule of the default rounding mode.
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    std::string s = buf;
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

std::vector<PanelLayout> panel_layout(const Dataset& data, std::span<const FitResult> fits,
                                      const PlotSpec& spec, std::size_t grid_points) {
    spec.validate();
    if (data.size() == 0) throw DataError("cannot plot an empty dataset");
    std::vector<FitResult> usable;
    for (const auto& f : fits) {
        if (f.ok()) usable.push_back(f);
    }
    if (usable.empty()) throw InvalidParameters("panel grid needs at least one converged fit");
    sort_by_r2(usable);

    const double x_scale = spec.normalize_axes ? normalizer(data.max_irradiance()) : 1.0;
    const double y_scale = spec.normalize_axes ? normalizer(data.max_rate()) : 1.0;
    auto place = [&](double x, double y) {
        Point p{x / x_scale, y / y_scale};
        if (spec.normalize_axes) {
            p.x = clamp_unit(p.x);
            p.y = clamp_unit(p.y);
        }
        return p;
    };

    const auto grid = high_res_grid(data, grid_points);
    std::vector<PanelLayout> panels;
    for (const auto& f : usable) {
        PanelLayout panel;
        panel.model = f.model;
        panel.r2 = f.r2;
        panel.p = f.n_free;
        panel.r2_label = "R² = " + round_half_even(f.r2, 3);
        panel.p_label = "p = " + std::to_string(f.n_free);
        panel.curve_grid = grid;
        panel.curve_values = curve_samples(f, grid);
        for (std::size_t j = 0; j < data.size(); ++j) {
            panel.points.push_back(place(data.irradiance[j], data.rate[j]));
        }
        for (std::size_t j = 0; j < grid.size(); ++j) {
            panel.curve.push_back(place(grid[j], panel.curve_values[j]));
        }
        panels.push_back(std::move(panel));
    }
    return panels;
}

std::array<std::string, 3> frequency_labels(const ClassSummary& summary) {
    if (summary.total == 0) throw InvalidParameters("class summary is empty");
    std::array<long, 3> tenths{};
    std::array<double, 3> remainder{};
    long assigned = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        const double exact = 1000.0 * static_cast<double>(summary.counts[c]) /
                             static_cast<double>(summary.total);
        tenths[c] = static_cast<long>(std::floor(exact));
        remainder[c] = exact - static_cast<double>(tenths[c]);
        assigned += tenths[c];
    }
    while (assigned < 1000) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < 3; ++c) {
            if (remainder[c] > remainder[best]) best = c;
        }
        ++tenths[best];
        remainder[best] = -1.0;
        ++assigned;
    }
    std::array<std::string, 3> out;
    for (std::size_t c = 0; c < 3; ++c) {
        out[c] = std::to_string(tenths[c] / 10) + "." + std::to_string(tenths[c] % 10) + "%";
    }
    return out;
}

std::string render_single(const Dataset& data, const FitResult& fit,
                          const std::optional<PredictionBand>& band, const PlotSpec& spec) {
    spec.validate();
    if (data.size() == 0) throw DataError("cannot plot an empty dataset");
    if (!fit.ok()) throw InvalidParameters("cannot plot a failed fit");
    const bool draw_band = spec.show_ci && band.has_value();

    const double x_max = normalizer(data.max_irradiance()) * kNormalizedMargin;
    if (draw_band) {
        for (double g : band->grid) {
            if (!(g >= 0.0 && g <= x_max)) {
                throw InvalidParameters("prediction band grid lies outside the plot range");
            }
        }
    }

    const auto grid = high_res_grid(data, 200);
    const auto curve = curve_samples(fit, grid);

    double y_lo = 0.0;
    double y_hi = 0.0;
    auto extend = [&](double v) {
        if (std::isfinite(v)) {
            y_lo = std::min(y_lo, v);
            y_hi = std::max(y_hi, v);
        }
    };
    for (double v : data.rate) extend(v);
    for (double v : curve) extend(v);
    if (draw_band) {
        for (double v : band->lower) extend(v);
        for (double v : band->upper) extend(v);
    }
    if (y_hi <= y_lo) y_hi = y_lo + 1.0;
    const double pad = 0.05 * (y_hi - y_lo);

    const Frame frame{70.0, 40.0, spec.width - 90.0, spec.height - 95.0,
                      0.0, x_max, y_lo < 0.0 ? y_lo - pad : 0.0, y_hi + pad};

    std::string svg = header(spec.width, spec.height);
    const std::string title =
        spec.title.empty() ? data.id + ": " + std::string(to_string(fit.model)) : spec.title;
    svg += text(spec.width / 2.0, 24.0, title, "middle", "title");
    svg += axes(frame, spec.x_label, spec.y_label);
    for (std::size_t j = 0; j < data.size(); ++j) {
        svg += "<circle class=\"obs\" cx=\"" + px(frame.sx(data.irradiance[j])) + "\" cy=\"" +
               px(frame.sy(data.rate[j])) + "\" r=\"3.5\" fill=\"none\" stroke=\"black\"/>\n";
    }
    svg += "<path class=\"fit\" d=\"" + polyline_path(frame, grid, curve) + "\" fill=\"none\" stroke=\"" +
           kCurveColor + "\" stroke-width=\"2\"/>\n";
    if (draw_band) {
        for (const auto* side : {&band->lower, &band->upper}) {
            svg += "<path class=\"band\" d=\"" + polyline_path(frame, band->grid, *side) +
                   "\" fill=\"none\" stroke=\"" + kBandColor + "\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>\n";
        }
    }
    svg += "</svg>\n";
    return svg;
}

std::string render_panel_grid(const Dataset& data, std::span<const FitResult> fits, const PlotSpec& spec) {
    const auto panels = panel_layout(data, fits, spec);
    const auto count = panels.size();
    const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count))));
    const auto rows = (count + cols - 1) / cols;
    const double top_band = spec.title.empty() ? 0.0 : 28.0;
    const double cell_w = spec.width / static_cast<double>(cols);
    const double cell_h = (spec.height - top_band) / static_cast<double>(rows);

    double x1 = kNormalizedMargin;
    double y0 = 0.0;
    double y1 = kNormalizedMargin;
    if (!spec.normalize_axes) {
        x1 = normalizer(data.max_irradiance()) * kNormalizedMargin;
        double lo = 0.0;
        double hi = 0.0;
        for (const auto& p : panels) {
            for (const auto& pt : p.points) lo = std::min(lo, pt.y), hi = std::max(hi, pt.y);
            for (const auto& pt : p.curve) {
                if (std::isfinite(pt.y)) lo = std::min(lo, pt.y), hi = std::max(hi, pt.y);
            }
        }
        y0 = lo;
        y1 = hi > lo ? hi * kNormalizedMargin : lo + 1.0;
    }

    std::string svg = header(spec.width, spec.height);
    if (!spec.title.empty()) svg += text(spec.width / 2.0, 20.0, spec.title, "middle", "title");
    for (std::size_t i = 0; i < count; ++i) {
        const auto& panel = panels[i];
        const double left = static_cast<double>(i % cols) * cell_w;
        const double top = top_band + static_cast<double>(i / cols) * cell_h;
        const Frame frame{left + 10.0, top + 34.0, cell_w - 20.0, cell_h - 44.0, 0.0, x1, y0, y1};

        svg += "<g class=\"panel\" data-model=\"" + std::string(to_string(panel.model)) + "\">\n";
        svg += "<rect class=\"frame\" x=\"" + px(frame.left) + "\" y=\"" + px(frame.top) + "\" width=\"" +
               px(frame.width) + "\" height=\"" + px(frame.height) + "\" fill=\"none\" stroke=\"#999999\"/>\n";
        svg += text(left + cell_w / 2.0, top + 14.0, to_string(panel.model), "middle", "title");
        svg += text(frame.left + 2.0, top + 28.0, panel.r2_label, "start", "r2");
        svg += text(frame.left + frame.width - 2.0, top + 28.0, panel.p_label, "end", "params");
        for (const auto& pt : panel.points) {
            svg += "<circle class=\"obs\" cx=\"" + px(frame.sx(pt.x)) + "\" cy=\"" + px(frame.sy(pt.y)) +
                   "\" r=\"2\" fill=\"none\" stroke=\"black\"/>\n";
        }
        std::vector<double> xs, ys;
        for (const auto& pt : panel.curve) xs.push_back(pt.x), ys.push_back(pt.y);
        svg += "<path class=\"fit\" d=\"" + polyline_path(frame, xs, ys) + "\" fill=\"none\" stroke=\"" +
               kCurveColor + "\" stroke-width=\"1.5\"/>\n";
        svg += "</g>\n";
    }
    svg += "</svg>\n";
    return svg;
}

std::string render_class_frequency(const ClassSummary& summary, const PlotSpec& spec) {
    spec.validate();
    const auto labels = frequency_labels(summary);
    const Frame frame{70.0, 40.0, spec.width - 90.0, spec.height - 95.0, 0.0, 3.0, 0.0, 1.0};

    std::string svg = header(spec.width, spec.height);
    svg += text(spec.width / 2.0, 24.0, spec.title.empty() ? "Curve types" : spec.title, "middle", "title");
    svg += axes(frame, "", "Relative frequency", false);
    constexpr ModelClass kOrder[] = {ModelClass::light_limited, ModelClass::light_saturated,
                                     ModelClass::photoinhibited};
    for (std::size_t c = 0; c < 3; ++c) {
        const double f = static_cast<double>(summary.counts[c]) / static_cast<double>(summary.total);
        const double x_left = frame.sx(c + 0.15);
        const double bar_w = frame.sx(c + 0.85) - x_left;
        const double y_top = frame.sy(f);
        svg += "<rect class=\"bar\" data-class=\"" + std::string(to_string(kOrder[c])) + "\" x=\"" +
               px(x_left) + "\" y=\"" + px(y_top) + "\" width=\"" + px(bar_w) + "\" height=\"" +
               px(frame.sy(0.0) - y_top) + "\" fill=\"" + kCurveColor + "\"/>\n";
        svg += text(x_left + bar_w / 2.0, y_top - 6.0, labels[c], "middle", "percent");
        svg += text(x_left + bar_w / 2.0, frame.top + frame.height + 36.0, to_string(kOrder[c]), "middle",
                    "category");
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace picurve
