#include "attn_audit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "attn_audit/error.hpp"

namespace attn_audit {
namespace {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      carry_ += (sum_ - t) + v;
    } else {
      carry_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

struct Moments {
  double n = 0.0;
  double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;

  double cov() const { return sxy - sx * sy / n; }
  double var_x() const { return sxx - sx * sx / n; }
  double var_y() const { return syy - sy * sy / n; }
};

// Sums of deviations from the first sample, which keeps the cancellation in
// cov/var small for data with a large offset.
Moments shifted_moments(std::span<const double> x, std::span<const double> y) {
  const double kx = x[0];
  const double ky = y[0];
  CompensatedSum sx, sy, sxx, syy, sxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - kx;
    const double dy = y[i] - ky;
    sx.add(dx);
    sy.add(dy);
    sxx.add(dx * dx);
    syy.add(dy * dy);
    sxy.add(dx * dy);
  }
  return {static_cast<double>(x.size()), sx.value(), sy.value(),
          sxx.value(), syy.value(), sxy.value()};
}

}  // namespace

CorrelationResult pearson(std::span<const double> x, std::span<const double> y,
                          std::string x_label, std::string y_label) {
  if (x.size() != y.size()) {
    throw ValidationError(fmt::format("pearson: {} x values but {} y values", x.size(), y.size()));
  }
  if (x.size() < 2) throw ValidationError("pearson needs at least two samples");

  CorrelationResult out;
  out.n = x.size();
  out.x_label = std::move(x_label);
  out.y_label = std::move(y_label);

  const Moments m = shifted_moments(x, y);
  const double vx = m.var_x();
  const double vy = m.var_y();
  if (!(vx > 0.0) || !(vy > 0.0)) {
    out.degenerate = true;
    return out;
  }
  out.rho = std::clamp(m.cov() / std::sqrt(vx * vy), -1.0, 1.0);
  return out;
}

std::optional<LinearFit> least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const Moments m = shifted_moments(x, y);
  const double vx = m.var_x();
  if (!(vx > 0.0)) return std::nullopt;
  LinearFit fit;
  fit.slope = m.cov() / vx;
  fit.intercept = (y[0] + m.sy / m.n) - fit.slope * (x[0] + m.sx / m.n);
  return fit;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw ValidationError("mean of an empty sample");
  CompensatedSum s;
  for (double v : values) s.add(v);
  return s.value() / static_cast<double>(values.size());
}

std::vector<HistogramBin> histogram(std::span<const double> values, std::size_t bin_count,
                                    std::optional<std::pair<double, double>> range) {
  if (values.empty()) throw ValidationError("histogram of an empty sample");
  if (bin_count == 0) throw ValidationError("histogram needs at least one bin");

  double lo, hi;
  if (range) {
    std::tie(lo, hi) = *range;
    if (!(lo < hi)) {
      throw ValidationError(fmt::format("histogram range [{}, {}] has zero or negative width", lo, hi));
    }
  } else {
    auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo = *mn;
    hi = *mx;
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
  }

  const double width = (hi - lo) / static_cast<double>(bin_count);
  std::vector<HistogramBin> bins(bin_count);
  for (std::size_t k = 0; k < bin_count; ++k) {
    bins[k].lower = lo + width * static_cast<double>(k);
    bins[k].upper = k + 1 == bin_count ? hi : lo + width * static_cast<double>(k + 1);
  }
  for (double v : values) {
    if (!(v >= lo && v <= hi)) continue;
    std::size_t k = v == hi ? bin_count - 1
                            : static_cast<std::size_t>((v - lo) / (hi - lo) *
                                                       static_cast<double>(bin_count));
    k = std::min(k, bin_count - 1);
    // Keep bin membership consistent with the reported edges.
    while (k > 0 && v < bins[k].lower) --k;
    while (k + 1 < bin_count && v >= bins[k + 1].lower) ++k;
    ++bins[k].count;
  }
  return bins;
}

}  // namespace attn_audit
