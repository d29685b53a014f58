#pragma once

#include <string>
#include <string_view>

#include "attn_audit/matrix.hpp"

namespace attn_audit {

enum class NormKind { raw, row, column, softmax };

struct NormalizationMode {
  NormKind kind = NormKind::raw;
  // Softmax temperature; ignored by the other kinds. Must be > 0.
  double temperature = 1.0;

  static NormalizationMode raw() { return {NormKind::raw, 1.0}; }
  static NormalizationMode row() { return {NormKind::row, 1.0}; }
  static NormalizationMode column() { return {NormKind::column, 1.0}; }
  static NormalizationMode softmax(double temperature = 1.0) {
    return {NormKind::softmax, temperature};
  }
};

// "raw" | "row" | "column" | "softmax"; throws UsageError otherwise.
NormKind parse_norm_kind(std::string_view name);
std::string_view to_string(NormKind kind);
// e.g. "softmax(t=0.5)", used in report metadata.
std::string describe(const NormalizationMode& mode);

// raw: copy. row/column: divide each row/column by its sum (DegenerateError
// on an all-zero row/column). softmax: row-wise exp(a/t) / sum exp(a'/t).
Matrix normalize(const Matrix& matrix, const NormalizationMode& mode);

}  // namespace attn_audit
