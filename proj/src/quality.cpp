#include "attn_audit/quality.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <unicode/uchar.h>
#include <unicode/utf8.h>
#include <span>
#include <unordered_map>

#include "attn_audit/error.hpp"

namespace attn_audit {
namespace {

// Decodes UTF-8 into code points; ill-formed sequences become U+FFFD.
std::vector<UChar32> decode(std::string_view text) {
  std::vector<UChar32> out;
  out.reserve(text.size());
  const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
  const int32_t length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    out.push_back(c < 0 ? 0xFFFD : c);
  }
  return out;
}

void append_utf8(std::string& out, UChar32 c) {
  char buffer[U8_MAX_LENGTH];
  int32_t len = 0;
  UBool error = false;
  U8_APPEND(reinterpret_cast<uint8_t*>(buffer), len, U8_MAX_LENGTH, c, error);
  if (!error) out.append(buffer, static_cast<std::size_t>(len));
}

std::string encode(std::span<const UChar32> cps) {
  std::string out;
  for (UChar32 c : cps) append_utf8(out, c);
  return out;
}

std::string ngram_key(const TokenSequence& seq, std::size_t start, std::size_t n) {
  std::string key;
  for (std::size_t k = 0; k < n; ++k) {
    if (k) key += '\x1f';
    key += seq[start + k];
  }
  return key;
}

std::unordered_map<std::string, std::size_t> ngram_counts(const TokenSequence& seq,
                                                          std::size_t n) {
  std::unordered_map<std::string, std::size_t> counts;
  if (seq.size() < n) return counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) ++counts[ngram_key(seq, i, n)];
  return counts;
}

bool are_synonyms(const SynonymTable& table, const std::string& a, const std::string& b) {
  if (auto it = table.find(a); it != table.end() && it->second.count(b)) return true;
  if (auto it = table.find(b); it != table.end() && it->second.count(a)) return true;
  return false;
}

}  // namespace

TokenSequence::TokenSequence(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw ValidationError(fmt::format("token {} is empty", i));
  }
}

std::string to_lower(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (UChar32 c : decode(text)) append_utf8(out, u_tolower(c));
  return out;
}

TokenSequence tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  const std::vector<UChar32> cps = decode(text);
  std::vector<UChar32> word;

  auto flush = [&] {
    if (word.empty()) return;
    std::size_t lo = 0;
    std::size_t hi = word.size();
    while (lo < hi && u_ispunct(word[lo])) ++lo;
    while (hi > lo && u_ispunct(word[hi - 1])) --hi;
    for (std::size_t i = 0; i < lo; ++i) tokens.push_back(encode(std::span(&word[i], 1)));
    if (hi > lo) tokens.push_back(encode(std::span(word.data() + lo, hi - lo)));
    for (std::size_t i = hi; i < word.size(); ++i) {
      tokens.push_back(encode(std::span(&word[i], 1)));
    }
    word.clear();
  };

  for (UChar32 c : cps) {
    if (u_isUWhiteSpace(c)) {
      flush();
    } else {
      word.push_back(u_tolower(c));
    }
  }
  flush();
  return TokenSequence(std::move(tokens));
}

NgramMatch modified_ngram_precision(const TokenSequence& hyp, const TokenSequence& ref,
                                    std::size_t n) {
  if (n == 0) throw UsageError("n-gram order must be >= 1");
  NgramMatch out;
  if (hyp.size() < n) return out;
  const auto hyp_counts = ngram_counts(hyp, n);
  const auto ref_counts = ngram_counts(ref, n);
  out.total = hyp.size() - n + 1;
  for (const auto& [gram, count] : hyp_counts) {
    auto it = ref_counts.find(gram);
    if (it != ref_counts.end()) out.matches += std::min(count, it->second);
  }
  return out;
}

Smoothing parse_smoothing(std::string_view name) {
  if (name == "none") return Smoothing::none;
  if (name == "add-epsilon") return Smoothing::add_epsilon;
  throw UsageError(fmt::format("unknown smoothing '{}' (expected none|add-epsilon)", name));
}

std::string_view to_string(Smoothing smoothing) {
  return smoothing == Smoothing::none ? "none" : "add-epsilon";
}

BleuBreakdown corpus_bleu(const std::vector<TokenSequence>& hyps,
                          const std::vector<TokenSequence>& refs, Smoothing smoothing) {
  if (hyps.size() != refs.size()) {
    throw ValidationError(fmt::format("{} hypotheses but {} references", hyps.size(), refs.size()));
  }
  if (hyps.empty()) throw ValidationError("BLEU of an empty corpus");

  BleuBreakdown out;
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    out.hyp_len += hyps[k].size();
    out.ref_len += refs[k].size();
    for (std::size_t n = 1; n <= kMaxOrder; ++n) {
      const NgramMatch m = modified_ngram_precision(hyps[k], refs[k], n);
      out.ngrams[n - 1].matches += m.matches;
      out.ngrams[n - 1].total += m.total;
    }
  }
  if (out.hyp_len == 0) throw ValidationError("BLEU undefined: hypothesis length is 0");

  const double c = static_cast<double>(out.hyp_len);
  const double r = static_cast<double>(out.ref_len);
  out.brevity_penalty = std::exp(std::min(0.0, 1.0 - r / c));

  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 1; n <= kMaxOrder; ++n) {
    const NgramMatch& m = out.ngrams[n - 1];
    double p;
    if (m.total == 0) {
      p = smoothing == Smoothing::add_epsilon ? 1.0 : 0.0;
    } else if (m.matches == 0 && n >= 2 && smoothing == Smoothing::add_epsilon) {
      p = kSmoothingEpsilon / static_cast<double>(m.total);
    } else {
      p = static_cast<double>(m.matches) / static_cast<double>(m.total);
    }
    out.precisions[n - 1] = p;
    if (p == 0.0) {
      zero = true;
    } else {
      log_sum += std::log(p) / static_cast<double>(kMaxOrder);
    }
  }
  out.score = zero ? 0.0 : std::min(1.0, out.brevity_penalty * std::exp(log_sum));
  return out;
}

BleuBreakdown sentence_bleu(const TokenSequence& hyp, const TokenSequence& ref) {
  if (ref.empty()) throw ValidationError("sentence BLEU needs a non-empty reference");
  if (hyp.empty()) {
    BleuBreakdown out;
    out.ref_len = ref.size();
    out.brevity_penalty = 0.0;
    out.degenerate = true;
    return out;
  }
  return corpus_bleu({hyp}, {ref}, Smoothing::add_epsilon);
}

SynonymTable read_synonyms(std::istream& in) {
  SynonymTable table;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ParseError("synonym line must be 'word<TAB>syn1,syn2,...'", number);
    }
    auto& entry = table[to_lower(line.substr(0, tab))];
    std::string_view rest(line);
    rest.remove_prefix(tab + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      if (!item.empty()) entry.insert(to_lower(item));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  }
  return table;
}

std::size_t count_chunks(const std::vector<std::pair<std::size_t, std::size_t>>& links) {
  std::size_t chunks = 0;
  for (std::size_t k = 0; k < links.size(); ++k) {
    const bool continues = k > 0 && links[k].first == links[k - 1].first + 1 &&
                           links[k].second == links[k - 1].second + 1;
    if (!continues) ++chunks;
  }
  return chunks;
}

MeteorBreakdown meteor(const TokenSequence& hyp, const TokenSequence& ref,
                       const SynonymTable* synonyms) {
  if (ref.empty()) throw ValidationError("METEOR needs a non-empty reference");
  MeteorBreakdown out;
  if (hyp.empty()) {
    out.degenerate = true;
    return out;
  }

  constexpr std::size_t kUnmatched = static_cast<std::size_t>(-1);
  std::vector<std::size_t> hyp_link(hyp.size(), kUnmatched);
  std::vector<bool> ref_used(ref.size(), false);

  auto match_stage = [&](auto&& equal) {
    for (std::size_t i = 0; i < hyp.size(); ++i) {
      if (hyp_link[i] != kUnmatched) continue;
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (!ref_used[j] && equal(hyp[i], ref[j])) {
          hyp_link[i] = j;
          ref_used[j] = true;
          break;
        }
      }
    }
  };
  match_stage([](const std::string& a, const std::string& b) { return a == b; });
  out.exact_matches =
      static_cast<std::size_t>(std::count_if(hyp_link.begin(), hyp_link.end(),
                                             [&](std::size_t j) { return j != kUnmatched; }));
  if (synonyms && !synonyms->empty()) {
    match_stage([&](const std::string& a, const std::string& b) {
      return are_synonyms(*synonyms, a, b);
    });
  }

  std::vector<std::pair<std::size_t, std::size_t>> links;
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    if (hyp_link[i] != kUnmatched) links.emplace_back(i, hyp_link[i]);
  }
  out.matches = links.size();
  if (out.matches == 0) return out;

  const double m = static_cast<double>(out.matches);
  out.precision = m / static_cast<double>(hyp.size());
  out.recall = m / static_cast<double>(ref.size());
  out.f_mean = out.precision * out.recall /
               (kMeteorAlpha * out.precision + (1.0 - kMeteorAlpha) * out.recall);
  out.chunks = count_chunks(links);
  out.penalty = kMeteorGamma * std::pow(static_cast<double>(out.chunks) / m, kMeteorBeta);
  out.score = out.f_mean * (1.0 - out.penalty);
  return out;
}

}  // namespace attn_audit
