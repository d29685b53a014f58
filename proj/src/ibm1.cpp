#include "attn_audit/ibm1.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "attn_audit/error.hpp"

namespace attn_audit {

std::optional<std::size_t> TranslationTable::source_id(std::string_view word) const {
  auto it = source_index_.find(std::string(word));
  if (it == source_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> TranslationTable::target_id(std::string_view word) const {
  auto it = target_index_.find(std::string(word));
  if (it == target_index_.end()) return std::nullopt;
  return it->second;
}

double TranslationTable::prob(std::size_t source, std::size_t target) const {
  if (source >= rows_.size()) return 0.0;
  const auto& row = rows_[source];
  auto it = std::lower_bound(row.begin(), row.end(), target,
                             [](const Entry& e, std::size_t t) { return e.target < t; });
  return it != row.end() && it->target == target ? it->prob : 0.0;
}

double TranslationTable::prob(std::string_view source, std::string_view target) const {
  auto e = source_id(source);
  auto f = target_id(target);
  return e && f ? prob(*e, *f) : 0.0;
}

double TranslationTable::null_prob(std::string_view target) const {
  auto f = target_id(target);
  return f ? prob(kNullSource, *f) : 0.0;
}

double TranslationTable::source_mass(std::size_t source) const {
  double sum = 0.0;
  if (source < rows_.size()) {
    for (const auto& e : rows_[source]) sum += e.prob;
  }
  return sum;
}

Ibm1Trainer::Ibm1Trainer(const ParallelCorpus& corpus) {
  if (corpus.empty()) throw ValidationError("cannot train IBM Model 1 on an empty corpus");

  table_.source_words_.emplace_back();  // NULL
  auto intern = [](std::vector<std::string>& words,
                   std::unordered_map<std::string, std::size_t>& index,
                   const std::string& w) {
    auto [it, inserted] = index.try_emplace(w, words.size());
    if (inserted) words.push_back(w);
    return it->second;
  };

  sentences_.reserve(corpus.size());
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    const auto& pair = corpus[k];
    if (pair.source.empty() || pair.target.empty()) {
      throw ValidationError(fmt::format("sentence pair {} has an empty side", k + 1));
    }
    Sentence s;
    s.source.push_back(TranslationTable::kNullSource);
    for (const auto& w : pair.source) {
      s.source.push_back(intern(table_.source_words_, table_.source_index_, w));
    }
    for (const auto& w : pair.target) {
      s.target.push_back(intern(table_.target_words_, table_.target_index_, w));
    }
    sentences_.push_back(std::move(s));
  }

  // Co-occurrence sets, sorted by target id.
  std::vector<std::vector<std::size_t>> cooc(table_.source_words_.size());
  for (const auto& s : sentences_) {
    for (std::size_t e : s.source) cooc[e].insert(cooc[e].end(), s.target.begin(), s.target.end());
  }
  const double uniform = 1.0 / static_cast<double>(table_.target_words_.size());
  table_.rows_.resize(cooc.size());
  for (std::size_t e = 0; e < cooc.size(); ++e) {
    auto& targets = cooc[e];
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    auto& row = table_.rows_[e];
    row.reserve(targets.size());
    for (std::size_t f : targets) row.push_back({f, uniform});
  }

  for (auto& s : sentences_) {
    s.slot.resize(s.target.size() * s.source.size());
    for (std::size_t j = 0; j < s.target.size(); ++j) {
      for (std::size_t i = 0; i < s.source.size(); ++i) {
        const auto& row = table_.rows_[s.source[i]];
        auto it = std::lower_bound(
            row.begin(), row.end(), s.target[j],
            [](const TranslationTable::Entry& e, std::size_t t) { return e.target < t; });
        s.slot[j * s.source.size() + i] = static_cast<std::size_t>(it - row.begin());
      }
    }
  }

  counts_.resize(table_.rows_.size());
  for (std::size_t e = 0; e < counts_.size(); ++e) counts_[e].resize(table_.rows_[e].size());
}

void Ibm1Trainer::iterate() {
  for (auto& c : counts_) std::fill(c.begin(), c.end(), 0.0);

  std::vector<double> posterior;
  for (const auto& s : sentences_) {
    const std::size_t l = s.source.size();
    posterior.resize(l);
    for (std::size_t j = 0; j < s.target.size(); ++j) {
      double denom = 0.0;
      for (std::size_t i = 0; i < l; ++i) {
        posterior[i] = table_.rows_[s.source[i]][s.slot[j * l + i]].prob;
        denom += posterior[i];
      }
      if (denom <= 0.0) continue;
      for (std::size_t i = 0; i < l; ++i) {
        counts_[s.source[i]][s.slot[j * l + i]] += posterior[i] / denom;
      }
    }
  }

  for (std::size_t e = 0; e < counts_.size(); ++e) {
    double total = 0.0;
    for (double c : counts_[e]) total += c;
    auto& row = table_.rows_[e];
    if (total <= 0.0) continue;
    for (std::size_t k = 0; k < row.size(); ++k) row[k].prob = counts_[e][k] / total;
  }
  ++iterations_;
}

double Ibm1Trainer::log_likelihood() const {
  double ll = 0.0;
  for (const auto& s : sentences_) {
    const std::size_t l = s.source.size();
    for (std::size_t j = 0; j < s.target.size(); ++j) {
      double sum = 0.0;
      for (std::size_t i = 0; i < l; ++i) {
        sum += table_.rows_[s.source[i]][s.slot[j * l + i]].prob;
      }
      ll += std::log(sum / static_cast<double>(l));
    }
  }
  return ll;
}

TranslationTable train_ibm1(const ParallelCorpus& corpus, std::size_t iterations) {
  if (iterations == 0) throw UsageError("IBM Model 1 needs at least one EM iteration");
  Ibm1Trainer trainer(corpus);
  for (std::size_t k = 0; k < iterations; ++k) trainer.iterate();
  return trainer.table();
}

AlignmentSet viterbi_align(const TranslationTable& table, const ParallelSentence& pair,
                           ViterbiDiagnostics* diagnostics) {
  AlignmentSet out;
  std::vector<std::optional<std::size_t>> source_ids;
  source_ids.reserve(pair.source.size());
  for (const auto& w : pair.source) source_ids.push_back(table.source_id(w));

  for (std::size_t j = 0; j < pair.target.size(); ++j) {
    const auto f = table.target_id(pair.target[j]);
    if (!f) {
      if (diagnostics) diagnostics->unseen_targets.push_back(j);
      continue;
    }
    double best = 0.0;
    std::optional<std::size_t> best_i;
    for (std::size_t i = 0; i < source_ids.size(); ++i) {
      if (!source_ids[i]) continue;
      const double p = table.prob(*source_ids[i], *f);
      if (p > best) {
        best = p;
        best_i = i;
      }
    }
    if (best_i && !(table.prob(TranslationTable::kNullSource, *f) > best)) {
      out.insert({*best_i, j});
    }
  }
  return out;
}

std::vector<AlignmentSet> align_corpus(const ParallelCorpus& corpus, std::size_t iterations,
                                       Symmetrization mode) {
  ParallelCorpus reversed;
  reversed.reserve(corpus.size());
  for (const auto& p : corpus) reversed.push_back({p.target, p.source});

  const TranslationTable forward = train_ibm1(corpus, iterations);
  const TranslationTable backward = train_ibm1(reversed, iterations);

  std::vector<AlignmentSet> out;
  out.reserve(corpus.size());
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    out.push_back(symmetrize(viterbi_align(forward, corpus[k]),
                             flip(viterbi_align(backward, reversed[k])), mode));
  }
  return out;
}

}  // namespace attn_audit
