#include "attn_audit/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <json.hpp>
#include <optional>

#include "attn_audit/error.hpp"

namespace attn_audit {
namespace {

constexpr Rgb kWhite{255, 255, 255};
constexpr Rgb kDark{8, 48, 107};

std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(std::string_view kind, const nlohmann::ordered_json& meta,
                   std::string_view title) {
  std::string out = fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" class=\"{2}\">\n"
      "<metadata>{3}</metadata>\n"
      "<rect x=\"0\" y=\"0\" width=\"{0}\" height=\"{1}\" fill=\"#ffffff\"/>\n",
      kCanvasWidth, kCanvasHeight, kind, escape(meta.dump()));
  if (!title.empty()) {
    out += fmt::format(
        "<text x=\"{:.2f}\" y=\"28.00\" font-family=\"sans-serif\" font-size=\"18\" "
        "text-anchor=\"middle\">{}</text>\n",
        kCanvasWidth / 2.0, escape(title));
  }
  return out;
}

struct Axis {
  double lo, hi;
  double px_lo, px_hi;

  double map(double v) const { return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo); }
};

std::pair<double, double> padded_bounds(std::span<const double> v) {
  auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  const double range = *mx - *mn;
  const double pad = range > 0.0 ? range * kAxisPadding : 0.5;
  return {*mn - pad, *mx + pad};
}

constexpr double kPlotLeft = 90.0;
constexpr double kPlotRight = 770.0;
constexpr double kPlotTop = 60.0;
constexpr double kPlotBottom = 530.0;
constexpr int kTicks = 5;

std::string axes(const Axis& x, const Axis& y, std::string_view x_label,
                 std::string_view y_label) {
  std::string out;
  out += fmt::format(
      "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" "
      "stroke=\"#000000\" stroke-width=\"1\"/>\n",
      kPlotLeft, kPlotTop, kPlotRight - kPlotLeft, kPlotBottom - kPlotTop);
  for (int k = 0; k <= kTicks; ++k) {
    const double vx = x.lo + (x.hi - x.lo) * k / kTicks;
    const double px = x.map(vx);
    out += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"#000000\"/>\n"
        "<text x=\"{0:.2f}\" y=\"{3:.2f}\" font-family=\"sans-serif\" font-size=\"12\" "
        "text-anchor=\"middle\">{4:.3g}</text>\n",
        px, kPlotBottom, kPlotBottom + 5.0, kPlotBottom + 20.0, vx);
    const double vy = y.lo + (y.hi - y.lo) * k / kTicks;
    const double py = y.map(vy);
    out += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"#000000\"/>\n"
        "<text x=\"{3:.2f}\" y=\"{4:.2f}\" font-family=\"sans-serif\" font-size=\"12\" "
        "text-anchor=\"end\">{5:.3g}</text>\n",
        kPlotLeft - 5.0, py, kPlotLeft, kPlotLeft - 8.0, py + 4.0, vy);
  }
  out += fmt::format(
      "<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"14\" "
      "text-anchor=\"middle\">{}</text>\n",
      (kPlotLeft + kPlotRight) / 2.0, kPlotBottom + 45.0, escape(x_label));
  out += fmt::format(
      "<text x=\"{0:.2f}\" y=\"{1:.2f}\" font-family=\"sans-serif\" font-size=\"14\" "
      "text-anchor=\"middle\" transform=\"rotate(-90 {0:.2f} {1:.2f})\">{2}</text>\n",
      30.0, (kPlotTop + kPlotBottom) / 2.0, escape(y_label));
  return out;
}

}  // namespace

Rgb heat_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto lerp = [t](int a, int b) {
    return static_cast<int>(std::lround(a + (b - a) * t));
  };
  return {lerp(kWhite.r, kDark.r), lerp(kWhite.g, kDark.g), lerp(kWhite.b, kDark.b)};
}

std::string to_hex(Rgb c) { return fmt::format("#{:02x}{:02x}{:02x}", c.r, c.g, c.b); }

std::string render_heatmap(const Matrix& m, std::span<const std::string> row_labels,
                           std::span<const std::string> col_labels, std::string_view title) {
  if (m.empty()) throw ValidationError("cannot render an empty matrix");
  if (row_labels.size() != m.rows() || col_labels.size() != m.cols()) {
    throw ValidationError(fmt::format("heatmap is {}x{} but got {} row and {} column labels",
                                      m.rows(), m.cols(), row_labels.size(), col_labels.size()));
  }
  const auto values = m.values();
  const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
  const double mn = *mn_it;
  const double mx = *mx_it;

  nlohmann::ordered_json meta;
  meta["kind"] = "heatmap";
  meta["rows"] = m.rows();
  meta["cols"] = m.cols();
  meta["min"] = mn;
  meta["max"] = mx;
  meta["ramp"] = "linear #ffffff->#08306b over [min,max]";

  constexpr double left = 140.0, top = 130.0, right = 780.0, bottom = 580.0;
  const double cw = (right - left) / static_cast<double>(m.cols());
  const double ch = (bottom - top) / static_cast<double>(m.rows());

  std::string out = header("heatmap", meta, title);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      const double t = mx > mn ? (v - mn) / (mx - mn) : 1.0;
      out += fmt::format(
          "<rect class=\"cell\" data-row=\"{}\" data-col=\"{}\" data-value=\"{}\" x=\"{:.2f}\" "
          "y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n",
          r, c, v, left + cw * c, top + ch * r, cw, ch, to_hex(heat_color(t)));
    }
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out += fmt::format(
        "<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"12\" "
        "text-anchor=\"end\">{}</text>\n",
        left - 6.0, top + ch * (r + 0.5) + 4.0, escape(row_labels[r]));
  }
  for (std::size_t c = 0; c < m.cols(); ++c) {
    const double x = left + cw * (c + 0.5);
    const double y = top - 8.0;
    out += fmt::format(
        "<text x=\"{0:.2f}\" y=\"{1:.2f}\" font-family=\"sans-serif\" font-size=\"12\" "
        "text-anchor=\"start\" transform=\"rotate(-45 {0:.2f} {1:.2f})\">{2}</text>\n",
        x, y, escape(col_labels[c]));
  }
  out += "</svg>\n";
  return out;
}

std::string render_scatter(std::span<const double> x, std::span<const double> y,
                           std::string_view x_label, std::string_view y_label, bool with_fit,
                           std::string_view title) {
  if (x.size() != y.size()) {
    throw ValidationError(fmt::format("scatter: {} x values but {} y values", x.size(), y.size()));
  }
  if (x.empty()) throw ValidationError("scatter needs at least one point");

  const auto [xlo, xhi] = padded_bounds(x);
  const auto [ylo, yhi] = padded_bounds(y);
  const Axis ax{xlo, xhi, kPlotLeft, kPlotRight};
  const Axis ay{ylo, yhi, kPlotBottom, kPlotTop};

  nlohmann::ordered_json meta;
  meta["kind"] = "scatter";
  meta["n"] = x.size();
  meta["x_label"] = x_label;
  meta["y_label"] = y_label;
  meta["x_bounds"] = {xlo, xhi};
  meta["y_bounds"] = {ylo, yhi};
  meta["axis_padding"] = kAxisPadding;

  std::optional<CorrelationResult> corr;
  if (x.size() >= 2) corr = pearson(x, y, std::string(x_label), std::string(y_label));
  meta["rho"] = corr && !corr->degenerate ? nlohmann::ordered_json(corr->rho) : nullptr;
  meta["degenerate"] = !corr || corr->degenerate;

  std::optional<LinearFit> fit;
  if (with_fit) fit = least_squares(x, y);
  if (!with_fit) {
    meta["fit"] = "off";
  } else if (fit) {
    meta["fit"] = "least-squares";
    meta["slope"] = fit->slope;
    meta["intercept"] = fit->intercept;
  } else {
    meta["fit"] = "skipped";
  }

  std::string out = header("scatter", meta, title);
  out += axes(ax, ay, x_label, y_label);
  out += fmt::format(
      "<clipPath id=\"plot-area\"><rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" "
      "height=\"{:.2f}\"/></clipPath>\n",
      kPlotLeft, kPlotTop, kPlotRight - kPlotLeft, kPlotBottom - kPlotTop);
  for (std::size_t i = 0; i < x.size(); ++i) {
    out += fmt::format(
        "<circle class=\"point\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"#08306b\" "
        "fill-opacity=\"0.7\"/>\n",
        ax.map(x[i]), ay.map(y[i]));
  }
  if (fit) {
    out += fmt::format(
        "<line class=\"fit\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" "
        "stroke=\"#cb181d\" stroke-width=\"2\" clip-path=\"url(#plot-area)\"/>\n",
        ax.map(xlo), ay.map(fit->slope * xlo + fit->intercept), ax.map(xhi),
        ay.map(fit->slope * xhi + fit->intercept));
  }
  const std::string annotation =
      corr && !corr->degenerate ? fmt::format("r = {:.4f}, n = {}", corr->rho, x.size())
                                : fmt::format("r undefined, n = {}", x.size());
  out += fmt::format(
      "<text class=\"annotation\" x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" "
      "font-size=\"14\" text-anchor=\"end\">{}</text>\n",
      kPlotRight - 8.0, kPlotTop + 20.0, annotation);
  out += "</svg>\n";
  return out;
}

std::string render_histogram(std::span<const HistogramBin> bins, std::string_view x_label,
                             std::string_view title) {
  if (bins.empty()) throw ValidationError("histogram needs at least one bin");
  std::size_t max_count = 0;
  for (const auto& b : bins) max_count = std::max(max_count, b.count);

  nlohmann::ordered_json meta;
  meta["kind"] = "histogram";
  meta["bins"] = bins.size();
  meta["max_count"] = max_count;
  nlohmann::ordered_json counts = nlohmann::ordered_json::array();
  for (const auto& b : bins) counts.push_back(b.count);
  meta["counts"] = counts;

  const double lo = bins.front().lower;
  const double hi = bins.back().upper > lo ? bins.back().upper : lo + 1.0;
  const Axis ax{lo, hi, kPlotLeft, kPlotRight};
  const Axis ay{0.0, static_cast<double>(std::max<std::size_t>(max_count, 1)), kPlotBottom,
                kPlotTop};

  std::string out = header("histogram", meta, title);
  out += axes(ax, ay, x_label, "count");
  for (std::size_t k = 0; k < bins.size(); ++k) {
    const auto& b = bins[k];
    const double x0 = ax.map(b.lower);
    const double x1 = ax.map(b.upper);
    const double top = ay.map(static_cast<double>(b.count));
    out += fmt::format(
        "<rect class=\"bar\" data-bin=\"{}\" data-count=\"{}\" x=\"{:.2f}\" y=\"{:.2f}\" "
        "width=\"{:.2f}\" height=\"{:.2f}\" fill=\"#4292c6\" stroke=\"#08306b\"/>\n",
        k, b.count, x0, top, x1 - x0, kPlotBottom - top);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace attn_audit
