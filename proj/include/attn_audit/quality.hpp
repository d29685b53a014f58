#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace attn_audit {

// Tokens as produced by tokenize(); never contains an empty string.
class TokenSequence {
 public:
  TokenSequence() = default;
  // Throws ValidationError if any token is empty.
  explicit TokenSequence(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }
  auto begin() const noexcept { return tokens_.begin(); }
  auto end() const noexcept { return tokens_.end(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;

 private:
  std::vector<std::string> tokens_;
};

// Unicode-aware lowercasing (simple case mapping) of UTF-8 text.
std::string to_lower(std::string_view text);

// Lowercases, splits on whitespace, then peels leading and trailing Unicode
// punctuation code points off each word as separate tokens.
TokenSequence tokenize(std::string_view text);

inline constexpr std::size_t kMaxOrder = 4;
inline constexpr double kSmoothingEpsilon = 0.1;

struct NgramMatch {
  std::size_t matches = 0;  // clipped
  std::size_t total = 0;    // hypothesis n-grams

  friend bool operator==(const NgramMatch&, const NgramMatch&) = default;
};

// Hypothesis n-gram counts clipped by their count in the reference.
NgramMatch modified_ngram_precision(const TokenSequence& hyp, const TokenSequence& ref,
                                    std::size_t n);

enum class Smoothing { none, add_epsilon };

Smoothing parse_smoothing(std::string_view name);
std::string_view to_string(Smoothing smoothing);

struct BleuBreakdown {
  std::array<NgramMatch, kMaxOrder> ngrams{};
  // p_n as used in the score, after smoothing.
  std::array<double, kMaxOrder> precisions{};
  double brevity_penalty = 1.0;
  std::size_t hyp_len = 0;  // c
  std::size_t ref_len = 0;  // r
  double score = 0.0;
  bool degenerate = false;

  friend bool operator==(const BleuBreakdown&, const BleuBreakdown&) = default;
};

// Corpus BLEU with counts pooled over all lines and a single reference each:
// exp(min(0, 1 - r/c)) * prod p_n^(1/4).
//
// smoothing = none: any p_n = 0 gives score 0, including orders the
// hypotheses are too short to have (0/0).
// smoothing = add_epsilon: for n >= 2 a zero match count becomes 0.1 before
// division; an order with no hypothesis n-grams at all contributes p_n = 1.
//
// Throws ValidationError on a length mismatch, empty input or c = 0.
BleuBreakdown corpus_bleu(const std::vector<TokenSequence>& hyps,
                          const std::vector<TokenSequence>& refs, Smoothing smoothing);

// corpus_bleu on one pair with add_epsilon. An empty hypothesis scores 0 with
// `degenerate` set.
BleuBreakdown sentence_bleu(const TokenSequence& hyp, const TokenSequence& ref);

inline constexpr std::string_view kMeteorVariant = "meteor-lite";

// word -> synonyms; matching checks both directions.
using SynonymTable = std::map<std::string, std::set<std::string>>;

// Lines of "word<TAB>syn1,syn2,...". Entries are lowercased.
SynonymTable read_synonyms(std::istream& in);

struct MeteorBreakdown {
  std::size_t matches = 0;
  std::size_t exact_matches = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f_mean = 0.0;
  std::size_t chunks = 0;
  double penalty = 0.0;
  double score = 0.0;
  bool degenerate = false;
};

inline constexpr double kMeteorAlpha = 0.9;  // F_mean = PR / (alpha P + (1-alpha) R)
inline constexpr double kMeteorGamma = 0.5;
inline constexpr double kMeteorBeta = 3.0;

// Exact-then-synonym greedy 1:1 matching, F_mean = 10PR / (R + 9P),
// penalty = 0.5 (chunks/m)^3, score = F_mean (1 - penalty). Throws
// ValidationError on an empty reference.
MeteorBreakdown meteor(const TokenSequence& hyp, const TokenSequence& ref,
                       const SynonymTable* synonyms = nullptr);

// Number of maximal runs of consecutive alignment links that are adjacent in
// both sequences. `links` pairs (hyp position, ref position), sorted by hyp
// position.
std::size_t count_chunks(const std::vector<std::pair<std::size_t, std::size_t>>& links);

}  // namespace attn_audit
