#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attn_audit/matrix.hpp"
#include "attn_audit/stats.hpp"

namespace attn_audit {

// All figures are self-contained SVG 1.1 on an 800x600 canvas and are
// byte-identical for identical input. Each document carries a <metadata>
// element with a JSON summary of what was drawn.
inline constexpr int kCanvasWidth = 800;
inline constexpr int kCanvasHeight = 600;
// Axis bounds extend the data range by this fraction on each side.
inline constexpr double kAxisPadding = 0.05;

struct Rgb {
  int r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Linear ramp from white (t = 0) to #08306b (t = 1); t is clamped to [0, 1].
Rgb heat_color(double t);
std::string to_hex(Rgb c);

// Cells are colored by heat_color((v - min) / (max - min)); a constant matrix
// is drawn at full intensity. Throws ValidationError on a label mismatch or
// an empty matrix.
std::string render_heatmap(const Matrix& matrix, std::span<const std::string> row_labels,
                           std::span<const std::string> col_labels, std::string_view title);

// One marker per point. With `with_fit` and at least two points with
// non-constant x, overlays the least-squares line; the metadata records rho,
// slope and intercept. Throws ValidationError on a length mismatch or no
// points.
std::string render_scatter(std::span<const double> x, std::span<const double> y,
                           std::string_view x_label, std::string_view y_label, bool with_fit,
                           std::string_view title = {});

// One bar per bin, height proportional to its count relative to the largest.
std::string render_histogram(std::span<const HistogramBin> bins, std::string_view x_label,
                             std::string_view title);

}  // namespace attn_audit
