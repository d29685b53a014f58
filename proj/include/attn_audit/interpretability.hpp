#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "attn_audit/alignment.hpp"
#include "attn_audit/attention_io.hpp"
#include "attn_audit/matrix.hpp"
#include "attn_audit/normalization.hpp"

namespace attn_audit {

inline constexpr double kDistributionTolerance = 1e-6;

// Entropies are in nats.
struct EntropySummary {
  std::vector<double> per_target;
  double avg = 0.0;
  // avg / ln(columns); 0 and `degenerate` set when there is a single column.
  double normalized_avg = 0.0;
  bool degenerate = false;
};

struct AgreementScore {
  double value = 0.0;
  std::size_t pair_count = 0;
};

// -sum p ln p with 0 ln 0 = 0. Throws DegenerateError if the entries are not a
// distribution (negative entry or sum off by more than 1e-6).
double token_entropy(std::span<const double> distribution);

// Throws DegenerateError on a matrix with no rows.
EntropySummary sentence_entropy(const Matrix& matrix);

// Mean of matrix(target, source) over the alignment pairs. Throws IndexError
// on an out-of-bounds pair and DegenerateError on an empty alignment.
AgreementScore alignment_agreement(const Matrix& matrix, const AlignmentSet& alignment);

// Entropy and agreement part of one sentence's metrics.
struct InterpretabilityRow {
  std::string id;
  double h_avg = 0.0;
  double h_norm = 0.0;
  double agreement = 0.0;
  std::size_t alignment_pairs = 0;
  std::size_t src_len = 0;  // source words
  std::size_t tgt_len = 0;  // target words
  bool entropy_degenerate = false;
};

struct CorpusMetricsOptions {
  // Applied to the word-level matrix before scoring; column mode is rejected
  // because the metrics need row-stochastic input.
  NormalizationMode normalization = NormalizationMode::raw();
  // Records without an alignment entry (or with an empty one) are skipped
  // instead of raising.
  bool skip_unaligned = false;
};

struct CorpusMetricsResult {
  std::vector<InterpretabilityRow> rows;
  std::vector<std::string> skipped;  // ids, in input order
};

// Scores every record on its word-aggregated matrix. Output order is input
// order, independent of thread count.
CorpusMetricsResult corpus_metrics(const std::vector<AttentionRecord>& records,
                                   const std::map<std::string, AlignmentSet>& alignments,
                                   const CorpusMetricsOptions& options = {});

// The word matrix corpus_metrics scores for one record.
Matrix scoring_matrix(const AttentionRecord& record, const NormalizationMode& normalization);

enum class AgreementPooling { per_sentence, pooled };

// per_sentence: unweighted mean of sentence agreements. pooled: mean over all
// alignment pairs of the corpus.
double corpus_agreement(std::span<const InterpretabilityRow> rows, AgreementPooling pooling);

}  // namespace attn_audit
