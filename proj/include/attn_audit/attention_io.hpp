#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "attn_audit/matrix.hpp"

namespace attn_audit {

// Subwords that belong to no word (EOS, padding, sentinels) map here.
inline constexpr int kNoWord = -1;
// `head` value for attention averaged over all heads.
inline constexpr int kAllHeads = -1;

inline constexpr double kIngestRowSumTolerance = 1e-4;
inline constexpr double kWordRowSumTolerance = 1e-6;

// One sentence pair as dumped by the extraction side: subword tokens, the
// whitespace words they belong to, and a |tgt_tokens| x |src_tokens| matrix
// whose row t is the attention of target subword t over the source.
struct AttentionRecord {
  std::string id;
  std::vector<std::string> src_tokens;
  std::vector<std::string> tgt_tokens;
  std::vector<std::string> src_words;
  std::vector<std::string> tgt_words;
  std::vector<int> src_word_map;
  std::vector<int> tgt_word_map;
  Matrix attention;
  int layer = 0;
  int head = kAllHeads;

  friend bool operator==(const AttentionRecord&, const AttentionRecord&) = default;
};

// Throws ValidationError describing the first violated invariant. Returns the
// record unchanged otherwise.
const AttentionRecord& validate_record(const AttentionRecord& record);

// Parses one dump line (no trailing newline). `line_number` is only used for
// error messages. The result is validated.
AttentionRecord parse_attention_record(std::string_view line, std::size_t line_number = 0);

// Reads a line-delimited dump. Blank lines are skipped; records come back in
// file order. Throws ParseError/ValidationError naming the 1-based line, and
// DuplicateIdError on a repeated id.
std::vector<AttentionRecord> parse_attention_dump(std::istream& in);

// Single-line encoding accepted by parse_attention_record.
std::string serialize_attention_record(const AttentionRecord& record);

inline constexpr std::string_view kAggregationPolicy = "sum-source/mean-target/renormalize";

// Word-level attention: |tgt_words| x |src_words|, rows renormalized to 1.
struct WordAttentionMatrix {
  Matrix matrix;
  std::string provenance;
  std::string policy{kAggregationPolicy};
  // Row mass before renormalization.
  std::vector<double> row_mass;
  // Target words whose mass was zero and were replaced by a uniform row.
  std::vector<std::size_t> uniform_rows;
};

// Collapses subword attention onto words: sum over the source subwords of a
// word, mean over the target subwords of a word, then renormalize each row.
// Subwords mapped to kNoWord are dropped. Throws ValidationError if a target
// word has no subwords.
WordAttentionMatrix aggregate_to_words(const AttentionRecord& record);

}  // namespace attn_audit
