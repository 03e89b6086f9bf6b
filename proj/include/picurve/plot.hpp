#pragma once

// Static SVG figures: one fit with optional confidence band, a panel grid of
// competing models, and a class-frequency bar chart.
//
// Styling is fixed: black open circles for observations, a solid dark-blue
// fitted curve, dashed grey band lines, sans-serif 12 px text. Output holds no
// timestamps and element order depends only on the inputs.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "picurve/classifier.hpp"
#include "picurve/dataset.hpp"
#include "picurve/fit.hpp"
#include "picurve/inference.hpp"

namespace picurve {

enum class PlotKind { single_fit, panel_grid, class_frequency };

struct PlotSpec {
    PlotKind kind = PlotKind::single_fit;
    int width = 640;
    int height = 480;
    bool show_ci = false;
    bool normalize_axes = true;
    std::string x_label = "Irradiance";
    std::string y_label = "Rate";
    std::string title;

    /// Throws InvalidParameters for non-positive dimensions.
    void validate() const;
};

/// Upper edge of normalized axes.
inline constexpr double kNormalizedMargin = 1.05;

/// `value` printed with `decimals` places, ties rounded to even.
std::string round_half_even(double value, int decimals);

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct PanelLayout {
    ModelId model = ModelId::lm;
    double r2 = 0.0;
    std::size_t p = 0;
    std::string r2_label;  // "R² = 0.987"
    std::string p_label;   // "p = 3"
    std::vector<double> curve_grid;
    std::vector<double> curve_values;  // evaluate_grid on curve_grid, unscaled; NaN where undefined
    std::vector<Point> points;         // plotted (possibly normalized and clamped)
    std::vector<Point> curve;
};

/// Panels for the converged fits, best R² first. Throws InvalidParameters when
/// none converged.
std::vector<PanelLayout> panel_layout(const Dataset& data, std::span<const FitResult> fits,
                                      const PlotSpec& spec, std::size_t grid_points = 200);

/// Percentages with one decimal that add up to exactly 100.0 (largest remainder).
std::array<std::string, 3> frequency_labels(const ClassSummary& summary);

std::string render_single(const Dataset& data, const FitResult& fit,
                          const std::optional<PredictionBand>& band, const PlotSpec& spec);

std::string render_panel_grid(const Dataset& data, std::span<const FitResult> fits,
                              const PlotSpec& spec);

std::string render_class_frequency(const ClassSummary& summary, const PlotSpec& spec);

}  // namespace picurve
