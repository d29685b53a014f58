#include "attn_audit/normalization.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "attn_audit/error.hpp"

namespace attn_audit {

NormKind parse_norm_kind(std::string_view name) {
  if (name == "raw") return NormKind::raw;
  if (name == "row") return NormKind::row;
  if (name == "column") return NormKind::column;
  if (name == "softmax") return NormKind::softmax;
  throw UsageError(fmt::format("unknown normalization mode '{}' (expected raw|row|column|softmax)",
                               name));
}

std::string_view to_string(NormKind kind) {
  switch (kind) {
    case NormKind::raw: return "raw";
    case NormKind::row: return "row";
    case NormKind::column: return "column";
    case NormKind::softmax: return "softmax";
  }
  return "raw";
}

std::string describe(const NormalizationMode& mode) {
  if (mode.kind == NormKind::softmax) return fmt::format("softmax(t={})", mode.temperature);
  return std::string(to_string(mode.kind));
}

Matrix normalize(const Matrix& m, const NormalizationMode& mode) {
  if (m.empty()) throw DegenerateError("cannot normalize an empty matrix");
  Matrix out = m;
  switch (mode.kind) {
    case NormKind::raw:
      break;
    case NormKind::row:
      for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        double sum = 0.0;
        for (double v : row) sum += v;
        if (sum == 0.0) throw DegenerateError(fmt::format("row {} is all zero", r));
        for (double& v : row) v /= sum;
      }
      break;
    case NormKind::column:
      for (std::size_t c = 0; c < out.cols(); ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < out.rows(); ++r) sum += out(r, c);
        if (sum == 0.0) throw DegenerateError(fmt::format("column {} is all zero", c));
        for (std::size_t r = 0; r < out.rows(); ++r) out(r, c) /= sum;
      }
      break;
    case NormKind::softmax: {
      if (!(mode.temperature > 0.0) || !std::isfinite(mode.temperature)) {
        throw UsageError(fmt::format("softmax temperature must be > 0, got {}", mode.temperature));
      }
      for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        const double peak = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double& v : row) {
          v = std::exp((v - peak) / mode.temperature);
          sum += v;
        }
        for (double& v : row) v /= sum;
      }
      break;
    }
  }
  return out;
}

}  // namespace attn_audit
