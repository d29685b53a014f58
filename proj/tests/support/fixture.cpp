#include "fixture.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <fstream>
#include <numeric>
#include <random>

namespace fixture {

using attn_audit::AlignmentSet;
using attn_audit::AttentionRecord;
using attn_audit::Matrix;

namespace {

struct Side {
  std::vector<std::string> tokens;
  std::vector<int> map;
  std::vector<std::size_t> first_subword;
};

Side split(const std::vector<std::string>& words, std::mt19937_64& rng) {
  Side side;
  std::bernoulli_distribution two(0.4);
  for (std::size_t w = 0; w < words.size(); ++w) {
    side.first_subword.push_back(side.tokens.size());
    const std::string& word = words[w];
    if (word.size() > 2 && two(rng)) {
      side.tokens.push_back("▁" + word.substr(0, 2));
      side.tokens.push_back(word.substr(2));
      side.map.insert(side.map.end(), 2, static_cast<int>(w));
    } else {
      side.tokens.push_back("▁" + word);
      side.map.push_back(static_cast<int>(w));
    }
  }
  side.tokens.push_back("</s>");
  side.map.push_back(attn_audit::kNoWord);
  return side;
}

}  // namespace

BlendFixture make_blend_fixture(const BlendOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::uniform_int_distribution<std::size_t> length(o.min_words, o.max_words);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> vocab(0, o.vocabulary - 1);

  BlendFixture f;
  std::vector<std::size_t> pool(o.vocabulary);
  std::iota(pool.begin(), pool.end(), 0);

  for (std::size_t k = 0; k < o.sentences; ++k) {
    const std::size_t n = std::min(length(rng), o.vocabulary);
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::size_t> entries(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));

    // Mostly monotone order with a few local swaps.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (unit(rng) < 0.25) std::swap(order[i], order[i + 1]);
    }

    AttentionRecord r;
    r.id = std::to_string(k);
    for (std::size_t e : entries) r.src_words.push_back(fmt::format("src{}", e));
    for (std::size_t j = 0; j < n; ++j) {
      r.tgt_words.push_back(fmt::format("tgt{}", entries[order[j]]));
    }
    AlignmentSet alignment;
    for (std::size_t j = 0; j < n; ++j) alignment.insert({order[j], j});

    const Side src = split(r.src_words, rng);
    const Side tgt = split(r.tgt_words, rng);
    r.src_tokens = src.tokens;
    r.src_word_map = src.map;
    r.tgt_tokens = tgt.tokens;
    r.tgt_word_map = tgt.map;
    r.layer = 5;
    r.head = attn_audit::kAllHeads;

    const double lambda = unit(rng);
    const std::size_t cols = r.src_tokens.size();
    r.attention = Matrix(r.tgt_tokens.size(), cols, (1.0 - lambda) / static_cast<double>(cols));
    for (std::size_t t = 0; t < r.tgt_tokens.size(); ++t) {
      const int w = r.tgt_word_map[t];
      // EOS attends to the source EOS.
      const std::size_t focus =
          w == attn_audit::kNoWord ? cols - 1 : src.first_subword[order[static_cast<std::size_t>(w)]];
      r.attention(t, focus) += lambda;
    }

    std::string hyp, ref;
    for (std::size_t j = 0; j < n; ++j) {
      if (j) {
        hyp += ' ';
        ref += ' ';
      }
      hyp += r.tgt_words[j];
      ref += unit(rng) < 0.6 * (1.0 - lambda) ? fmt::format("tgt{}", vocab(rng)) : r.tgt_words[j];
    }

    f.records.push_back(std::move(r));
    f.alignments.push_back(std::move(alignment));
    f.hypotheses.push_back(std::move(hyp));
    f.references.push_back(std::move(ref));
    f.lambdas.push_back(lambda);
  }
  return f;
}

FixturePaths write_fixture(const BlendFixture& f, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  FixturePaths p{dir / "dump.jsonl", dir / "align.txt", dir / "hyps.txt",
                 dir / "refs.txt",   dir / "src.txt",   dir / "tgt.txt"};
  std::ofstream dump(p.dump, std::ios::binary), align(p.alignments, std::ios::binary),
      hyps(p.hypotheses, std::ios::binary), refs(p.references, std::ios::binary),
      src(p.source, std::ios::binary), tgt(p.target, std::ios::binary);
  for (std::size_t k = 0; k < f.records.size(); ++k) {
    dump << attn_audit::serialize_attention_record(f.records[k]) << '\n';
    align << attn_audit::serialize_pharaoh(f.alignments[k]) << '\n';
    hyps << f.hypotheses[k] << '\n';
    refs << f.references[k] << '\n';
    for (std::size_t i = 0; i < f.records[k].src_words.size(); ++i) {
      src << (i ? " " : "") << f.records[k].src_words[i];
    }
    src << '\n';
    for (std::size_t i = 0; i < f.records[k].tgt_words.size(); ++i) {
      tgt << (i ? " " : "") << f.records[k].tgt_words[i];
    }
    tgt << '\n';
  }
  return p;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "attn_audit_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixture
