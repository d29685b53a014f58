#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace attn_audit {

struct CorrelationResult {
  double rho = 0.0;
  std::size_t n = 0;
  std::string x_label;
  std::string y_label;
  // Either variance is zero; rho is reported as 0.
  bool degenerate = false;

  friend bool operator==(const CorrelationResult&, const CorrelationResult&) = default;
};

// Pearson's r in a single shifted, compensated pass. Symmetric in its
// arguments bit for bit. Throws ValidationError on a length mismatch or fewer
// than two samples.
CorrelationResult pearson(std::span<const double> x, std::span<const double> y,
                          std::string x_label = "x", std::string y_label = "y");

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares y = slope x + intercept; nullopt when x has zero
// variance or fewer than two points.
std::optional<LinearFit> least_squares(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> values);

struct HistogramBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;

  friend bool operator==(const HistogramBin&, const HistogramBin&) = default;
};

// Equal-width bins, each [lower, upper) except the last, which is closed.
// Without `range` the data min/max are used; if all values are equal the
// range becomes [v - 0.5, v + 0.5]. Values outside an explicit range are not
// counted. Throws ValidationError on empty input, bin_count 0 or an explicit
// range with lo >= hi.
std::vector<HistogramBin> histogram(std::span<const double> values, std::size_t bin_count,
                                    std::optional<std::pair<double, double>> range = std::nullopt);

}  // namespace attn_audit
