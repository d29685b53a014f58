#include "attn_audit/attention_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fmt/format.h>
#include <json.hpp>
#include <unordered_set>

#include "attn_audit/error.hpp"
#include "attn_audit/parallel.hpp"

namespace attn_audit {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 10> kKeys = {
    "id",           "src_tokens",   "tgt_tokens", "src_words", "tgt_words",
    "src_word_map", "tgt_word_map", "attention",  "layer",     "head"};

void check_word_map(const std::vector<int>& map, std::size_t word_count, const char* side) {
  for (std::size_t i = 0; i < map.size(); ++i) {
    const int w = map[i];
    if (w < kNoWord || (w >= 0 && static_cast<std::size_t>(w) >= word_count)) {
      throw ValidationError(fmt::format(
          "{}_word_map[{}] = {} is out of range (expected -1 or 0..{})", side, i, w,
          static_cast<long long>(word_count) - 1));
    }
  }
}

template <typename T>
T get_field(const json& obj, std::string_view key) {
  try {
    return obj.at(std::string(key)).get<T>();
  } catch (const json::exception&) {
    throw ParseError(fmt::format("field '{}' has the wrong type", key));
  }
}

int get_int_field(const json& obj, std::string_view key) {
  const json& v = obj.at(std::string(key));
  if (!v.is_number_integer()) {
    throw ParseError(fmt::format("field '{}' must be an integer", key));
  }
  return v.get<int>();
}

}  // namespace

const AttentionRecord& validate_record(const AttentionRecord& r) {
  const std::size_t src_len = r.src_tokens.size();
  const std::size_t tgt_len = r.tgt_tokens.size();
  if (src_len == 0 || tgt_len == 0) {
    throw ValidationError(fmt::format("record '{}': empty token list (|X|={}, |Y|={})", r.id,
                                      src_len, tgt_len));
  }
  if (r.attention.rows() != tgt_len || r.attention.cols() != src_len) {
    throw ValidationError(fmt::format(
        "record '{}': attention is {}x{} but token lists imply {}x{}", r.id,
        r.attention.rows(), r.attention.cols(), tgt_len, src_len));
  }
  if (r.src_word_map.size() != src_len) {
    throw ValidationError(fmt::format("record '{}': src_word_map has {} entries, expected {}",
                                      r.id, r.src_word_map.size(), src_len));
  }
  if (r.tgt_word_map.size() != tgt_len) {
    throw ValidationError(fmt::format("record '{}': tgt_word_map has {} entries, expected {}",
                                      r.id, r.tgt_word_map.size(), tgt_len));
  }
  check_word_map(r.src_word_map, r.src_words.size(), "src");
  check_word_map(r.tgt_word_map, r.tgt_words.size(), "tgt");
  if (r.layer < 0) {
    throw ValidationError(fmt::format("record '{}': layer {} is negative", r.id, r.layer));
  }
  if (r.head < kAllHeads) {
    throw ValidationError(fmt::format("record '{}': head {} is invalid", r.id, r.head));
  }
  for (std::size_t t = 0; t < tgt_len; ++t) {
    double sum = 0.0;
    const auto row = r.attention.row(t);
    for (std::size_t s = 0; s < src_len; ++s) {
      const double a = row[s];
      if (!std::isfinite(a)) {
        throw ValidationError(
            fmt::format("record '{}': attention[{}][{}] is not finite", r.id, t, s));
      }
      if (a < 0.0) {
        throw ValidationError(
            fmt::format("record '{}': attention[{}][{}] = {} is negative", r.id, t, s, a));
      }
      sum += a;
    }
    if (std::abs(sum - 1.0) > kIngestRowSumTolerance) {
      throw ValidationError(
          fmt::format("record '{}': attention row {} sums to {} (expected 1 within {})", r.id,
                      t, sum, kIngestRowSumTolerance));
    }
  }
  return r;
}

AttentionRecord parse_attention_record(std::string_view line, std::size_t line_number) {
  try {
    json obj;
    try {
      obj = json::parse(line.begin(), line.end());
    } catch (const json::parse_error& e) {
      throw ParseError(fmt::format("malformed record: {}", e.what()));
    }
    if (!obj.is_object()) throw ParseError("record is not an object");
    for (const auto& key : kKeys) {
      if (!obj.contains(std::string(key))) {
        throw ParseError(fmt::format("missing field '{}'", key));
      }
    }
    if (obj.size() != kKeys.size()) {
      for (const auto& [key, _] : obj.items()) {
        if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
          throw ParseError(fmt::format("unexpected field '{}'", key));
        }
      }
    }

    AttentionRecord r;
    r.id = get_field<std::string>(obj, "id");
    r.src_tokens = get_field<std::vector<std::string>>(obj, "src_tokens");
    r.tgt_tokens = get_field<std::vector<std::string>>(obj, "tgt_tokens");
    r.src_words = get_field<std::vector<std::string>>(obj, "src_words");
    r.tgt_words = get_field<std::vector<std::string>>(obj, "tgt_words");
    r.src_word_map = get_field<std::vector<int>>(obj, "src_word_map");
    r.tgt_word_map = get_field<std::vector<int>>(obj, "tgt_word_map");
    r.layer = get_int_field(obj, "layer");
    r.head = get_int_field(obj, "head");

    const json& att = obj.at("attention");
    if (!att.is_array()) throw ParseError("field 'attention' must be an array of rows");
    std::vector<std::vector<double>> rows;
    rows.reserve(att.size());
    for (const auto& row : att) {
      if (!row.is_array()) throw ParseError("field 'attention' must be an array of rows");
      auto& out = rows.emplace_back();
      out.reserve(row.size());
      for (const auto& v : row) {
        if (!v.is_number()) throw ParseError("attention entries must be numbers");
        out.push_back(v.get<double>());
      }
    }
    try {
      r.attention = Matrix::from_rows(rows);
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("record '{}': {}", r.id, e.what()));
    }
    validate_record(r);
    return r;
  } catch (const ParseError& e) {
    if (line_number == 0) throw;
    throw ParseError(e.what(), line_number);
  } catch (const ValidationError& e) {
    if (line_number == 0) throw;
    throw ValidationError(fmt::format("line {}: {}", line_number, e.what()));
  }
}

std::vector<AttentionRecord> parse_attention_dump(std::istream& in) {
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.emplace_back(number, std::move(line));
  }

  auto records = parallel_map(lines.size(), [&](std::size_t i) {
    return parse_attention_record(lines[i].second, lines[i].first);
  });

  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!seen.insert(records[i].id).second) {
      throw DuplicateIdError(records[i].id);
    }
  }
  return records;
}

std::string serialize_attention_record(const AttentionRecord& r) {
  nlohmann::ordered_json obj;
  obj["id"] = r.id;
  obj["src_tokens"] = r.src_tokens;
  obj["tgt_tokens"] = r.tgt_tokens;
  obj["src_words"] = r.src_words;
  obj["tgt_words"] = r.tgt_words;
  obj["src_word_map"] = r.src_word_map;
  obj["tgt_word_map"] = r.tgt_word_map;
  obj["attention"] = r.attention.to_rows();
  obj["layer"] = r.layer;
  obj["head"] = r.head;
  return obj.dump();
}

WordAttentionMatrix aggregate_to_words(const AttentionRecord& r) {
  const std::size_t n_src = r.src_words.size();
  const std::size_t n_tgt = r.tgt_words.size();
  if (n_src == 0 || n_tgt == 0) {
    throw ValidationError(fmt::format("record '{}': no words to aggregate onto", r.id));
  }

  std::vector<std::size_t> subwords_per_target(n_tgt, 0);
  for (int w : r.tgt_word_map) {
    if (w != kNoWord) ++subwords_per_target[static_cast<std::size_t>(w)];
  }
  for (std::size_t w = 0; w < n_tgt; ++w) {
    if (subwords_per_target[w] == 0) {
      throw ValidationError(fmt::format(
          "record '{}': target word {} ('{}') has no subword tokens", r.id, w, r.tgt_words[w]));
    }
  }

  WordAttentionMatrix out;
  out.provenance = r.id;
  out.matrix = Matrix(n_tgt, n_src, 0.0);
  for (std::size_t t = 0; t < r.tgt_tokens.size(); ++t) {
    const int wt = r.tgt_word_map[t];
    if (wt == kNoWord) continue;
    const double weight = 1.0 / static_cast<double>(subwords_per_target[wt]);
    const auto row = r.attention.row(t);
    auto target = out.matrix.row(static_cast<std::size_t>(wt));
    for (std::size_t s = 0; s < r.src_tokens.size(); ++s) {
      const int ws = r.src_word_map[s];
      if (ws == kNoWord) continue;
      target[static_cast<std::size_t>(ws)] += weight * row[s];
    }
  }

  out.row_mass.resize(n_tgt);
  for (std::size_t w = 0; w < n_tgt; ++w) {
    auto row = out.matrix.row(w);
    double mass = 0.0;
    for (double v : row) mass += v;
    out.row_mass[w] = mass;
    if (mass > 0.0) {
      for (double& v : row) v /= mass;
    } else {
      for (double& v : row) v = 1.0 / static_cast<double>(n_src);
      out.uniform_rows.push_back(w);
    }
  }
  return out;
}

}  // namespace attn_audit
