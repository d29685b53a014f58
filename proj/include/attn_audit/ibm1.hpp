#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "attn_audit/alignment.hpp"

namespace attn_audit {

struct ParallelSentence {
  std::vector<std::string> source;
  std::vector<std::string> target;
};

using ParallelCorpus = std::vector<ParallelSentence>;

// Lexical translation probabilities t(target word | source word) of IBM
// Model 1. Source id 0 is the NULL word. Only pairs that co-occur in the
// training corpus are stored; every other t(f|e) is 0.
class TranslationTable {
 public:
  static constexpr std::size_t kNullSource = 0;

  std::size_t source_vocab_size() const noexcept { return source_words_.size(); }
  std::size_t target_vocab_size() const noexcept { return target_words_.size(); }

  std::optional<std::size_t> source_id(std::string_view word) const;
  std::optional<std::size_t> target_id(std::string_view word) const;

  double prob(std::size_t source, std::size_t target) const;
  // 0 if either word is unknown.
  double prob(std::string_view source, std::string_view target) const;
  double null_prob(std::string_view target) const;

  // Sum over target words of t(f | source).
  double source_mass(std::size_t source) const;

 private:
  friend class Ibm1Trainer;

  struct Entry {
    std::size_t target;
    double prob;
  };

  // Per source id, entries sorted by target id.
  std::vector<std::vector<Entry>> rows_;
  std::vector<std::string> source_words_;
  std::vector<std::string> target_words_;
  std::unordered_map<std::string, std::size_t> source_index_;
  std::unordered_map<std::string, std::size_t> target_index_;
};

// EM trainer for IBM Model 1 with a NULL-augmented source side. Starts from
// uniform t(f|e) = 1 / |target vocabulary|. Expected counts are accumulated
// in corpus order, so training is deterministic given the input.
class Ibm1Trainer {
 public:
  // Throws ValidationError on an empty corpus or an empty sentence.
  explicit Ibm1Trainer(const ParallelCorpus& corpus);

  // One E-step plus M-step.
  void iterate();

  // Corpus log-likelihood under the current table:
  // sum over sentences and target positions of log(sum_i t(f_j|e_i) / (l+1)).
  double log_likelihood() const;

  const TranslationTable& table() const noexcept { return table_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  struct Sentence {
    std::vector<std::size_t> source;  // includes NULL at position 0
    std::vector<std::size_t> target;
    // slot[j * source.size() + i] indexes table_.rows_[source[i]]
    std::vector<std::size_t> slot;
  };

  TranslationTable table_;
  std::vector<Sentence> sentences_;
  std::vector<std::vector<double>> counts_;
  std::size_t iterations_ = 0;
};

// Throws UsageError when iterations == 0.
TranslationTable train_ibm1(const ParallelCorpus& corpus, std::size_t iterations);

struct ViterbiDiagnostics {
  // Target positions whose word never appeared in training.
  std::vector<std::size_t> unseen_targets;
};

// Aligns each target position to argmax_i t(f_j | e_i) over the real source
// words and NULL. Ties go to the smallest source index, and NULL only wins
// when strictly more probable than every real word. NULL links are omitted.
AlignmentSet viterbi_align(const TranslationTable& table, const ParallelSentence& pair,
                           ViterbiDiagnostics* diagnostics = nullptr);

// Trains source->target and target->source models, aligns every sentence in
// both directions and symmetrizes. Output is in (source, target) orientation,
// one set per corpus line.
std::vector<AlignmentSet> align_corpus(const ParallelCorpus& corpus, std::size_t iterations,
                                       Symmetrization mode);

}  // namespace attn_audit
