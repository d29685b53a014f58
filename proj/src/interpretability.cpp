#include "attn_audit/interpretability.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <unordered_set>

#include "attn_audit/error.hpp"
#include "attn_audit/parallel.hpp"

namespace attn_audit {

double token_entropy(std::span<const double> p) {
  if (p.empty()) throw DegenerateError("entropy of an empty distribution");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0)) {
      throw DegenerateError(fmt::format("not a distribution: entry {} is {}", i, p[i]));
    }
    sum += p[i];
  }
  if (std::abs(sum - 1.0) > kDistributionTolerance) {
    throw DegenerateError(fmt::format("not a distribution: entries sum to {}", sum));
  }
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return std::clamp(h, 0.0, std::log(static_cast<double>(p.size())));
}

EntropySummary sentence_entropy(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) throw DegenerateError("entropy of an empty matrix");
  EntropySummary out;
  out.per_target.reserve(m.rows());
  double sum = 0.0;
  for (std::size_t t = 0; t < m.rows(); ++t) {
    out.per_target.push_back(token_entropy(m.row(t)));
    sum += out.per_target.back();
  }
  out.avg = sum / static_cast<double>(m.rows());
  if (m.cols() < 2) {
    out.degenerate = true;
    out.normalized_avg = 0.0;
  } else {
    out.normalized_avg = out.avg / std::log(static_cast<double>(m.cols()));
  }
  return out;
}

AgreementScore alignment_agreement(const Matrix& m, const AlignmentSet& alignment) {
  if (alignment.empty()) throw DegenerateError("agreement is undefined for an empty alignment");
  // Running mean: exact when every selected entry is equal (uniform rows).
  double running = 0.0;
  std::size_t n = 0;
  for (const auto& p : alignment) {
    if (p.target >= m.rows() || p.source >= m.cols()) {
      throw IndexError(fmt::format("alignment pair {}-{} is outside the {}x{} matrix", p.source,
                                   p.target, m.rows(), m.cols()));
    }
    ++n;
    running += (m(p.target, p.source) - running) / static_cast<double>(n);
  }
  return {running, alignment.size()};
}

Matrix scoring_matrix(const AttentionRecord& record, const NormalizationMode& normalization) {
  if (normalization.kind == NormKind::column) {
    throw UsageError("column normalization does not yield row distributions; "
                     "entropy and agreement need raw, row or softmax");
  }
  return normalize(aggregate_to_words(record).matrix, normalization);
}

CorpusMetricsResult corpus_metrics(const std::vector<AttentionRecord>& records,
                                   const std::map<std::string, AlignmentSet>& alignments,
                                   const CorpusMetricsOptions& options) {
  if (options.normalization.kind == NormKind::column) {
    throw UsageError("column normalization does not yield row distributions; "
                     "entropy and agreement need raw, row or softmax");
  }
  std::unordered_set<std::string> seen;
  std::vector<const AttentionRecord*> scored;
  CorpusMetricsResult out;
  for (const auto& r : records) {
    if (!seen.insert(r.id).second) throw DuplicateIdError(r.id);
    auto it = alignments.find(r.id);
    if (it == alignments.end() || it->second.empty()) {
      if (options.skip_unaligned) {
        out.skipped.push_back(r.id);
        continue;
      }
      throw ValidationError(it == alignments.end()
                                ? fmt::format("record '{}' has no alignment", r.id)
                                : fmt::format("record '{}' has an empty alignment", r.id));
    }
    scored.push_back(&r);
  }

  out.rows = parallel_map(scored.size(), [&](std::size_t k) {
    const AttentionRecord& r = *scored[k];
    const AlignmentSet& alignment = alignments.at(r.id);
    for (const auto& p : alignment) {
      if (p.source >= r.src_words.size() || p.target >= r.tgt_words.size()) {
        throw ValidationError(fmt::format(
            "record '{}': alignment pair {}-{} references a word outside {} source x {} target "
            "words",
            r.id, p.source, p.target, r.src_words.size(), r.tgt_words.size()));
      }
    }
    const Matrix m = scoring_matrix(r, options.normalization);
    const EntropySummary entropy = sentence_entropy(m);
    const AgreementScore agreement = alignment_agreement(m, alignment);
    InterpretabilityRow row;
    row.id = r.id;
    row.h_avg = entropy.avg;
    row.h_norm = entropy.normalized_avg;
    row.entropy_degenerate = entropy.degenerate;
    row.agreement = agreement.value;
    row.alignment_pairs = agreement.pair_count;
    row.src_len = r.src_words.size();
    row.tgt_len = r.tgt_words.size();
    return row;
  });
  return out;
}

double corpus_agreement(std::span<const InterpretabilityRow> rows, AgreementPooling pooling) {
  if (rows.empty()) throw DegenerateError("corpus agreement of an empty corpus");
  double num = 0.0;
  double den = 0.0;
  for (const auto& r : rows) {
    if (pooling == AgreementPooling::per_sentence) {
      num += r.agreement;
      den += 1.0;
    } else {
      num += r.agreement * static_cast<double>(r.alignment_pairs);
      den += static_cast<double>(r.alignment_pairs);
    }
  }
  return num / den;
}

}  // namespace attn_audit
