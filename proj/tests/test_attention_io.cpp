#include <doctest.h>

#include <random>
#include <sstream>

#include "attn_audit/attention_io.hpp"
#include "attn_audit/error.hpp"

using namespace attn_audit;

namespace {

AttentionRecord identity_record(std::string id = "s1") {
  AttentionRecord r;
  r.id = std::move(id);
  r.src_tokens = {"▁a", "▁b"};
  r.tgt_tokens = {"▁x", "▁y"};
  r.src_words = {"a", "b"};
  r.tgt_words = {"x", "y"};
  r.src_word_map = {0, 1};
  r.tgt_word_map = {0, 1};
  r.attention = Matrix{{1, 0}, {0, 1}};
  r.layer = 3;
  r.head = kAllHeads;
  return r;
}

const char* kLine =
    R"({"id":"s1","src_tokens":["a","b"],"tgt_tokens":["x","y"],"src_words":["a","b"],)"
    R"("tgt_words":["x","y"],"src_word_map":[0,1],"tgt_word_map":[0,1],)"
    R"("attention":[[1,0],[0,1]],"layer":0,"head":-1})";

}  // namespace

TEST_CASE("parse one well-formed record") {
  std::istringstream in(std::string(kLine) + "\n");
  const auto records = parse_attention_dump(in);
  REQUIRE(records.size() == 1);
  CHECK(records[0].id == "s1");
  CHECK(records[0].attention.rows() == 2);
  CHECK(records[0].attention.cols() == 2);
  CHECK(records[0].head == kAllHeads);
}

TEST_CASE("empty stream gives no records") {
  std::istringstream in("");
  CHECK(parse_attention_dump(in).empty());
  std::istringstream blank("\n  \n");
  CHECK(parse_attention_dump(blank).empty());
}

TEST_CASE("row summing to 1.2 is rejected and names row 0") {
  std::string line = kLine;
  line.replace(line.find("[[1,0],[0,1]]"), 13, "[[0.6,0.6],[0,1]]");
  try {
    parse_attention_record(line, 4);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    CHECK(what.find("row 0") != std::string::npos);
    CHECK(what.find("line 4") != std::string::npos);
  }
}

TEST_CASE("malformed line reports its line number") {
  std::istringstream in(std::string(kLine) + "\n{not json\n");
  try {
    parse_attention_dump(in);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("missing and unexpected keys are parse errors") {
  std::string missing = kLine;
  missing.replace(missing.find(",\"layer\":0"), 10, "");
  CHECK_THROWS_AS(parse_attention_record(missing), ParseError);

  std::string extra = kLine;
  extra.insert(extra.size() - 1, ",\"beam\":1");
  CHECK_THROWS_AS(parse_attention_record(extra), ParseError);

  std::string wrong_type = kLine;
  wrong_type.replace(wrong_type.find("\"layer\":0"), 9, "\"layer\":\"0\"");
  CHECK_THROWS_AS(parse_attention_record(wrong_type), ParseError);
}

TEST_CASE("duplicate ids are rejected") {
  std::istringstream in(std::string(kLine) + "\n" + kLine + "\n");
  CHECK_THROWS_AS(parse_attention_dump(in), DuplicateIdError);
}

TEST_CASE("validate_record") {
  SUBCASE("stochastic rows accepted") {
    auto r = identity_record();
    r.attention = Matrix{{0.5, 0.5}, {1.0, 0.0}};
    CHECK_NOTHROW(validate_record(r));
  }
  SUBCASE("row within ingest tolerance accepted") {
    auto r = identity_record();
    r.attention = Matrix{{0.50004, 0.5}, {1.0, 0.0}};
    CHECK_NOTHROW(validate_record(r));
  }
  SUBCASE("negative entry") {
    auto r = identity_record();
    r.attention = Matrix{{1.1, -0.1}, {0.0, 1.0}};
    CHECK_THROWS_WITH_AS(validate_record(r), doctest::Contains("negative"), ValidationError);
  }
  SUBCASE("three rows for two target tokens") {
    auto r = identity_record();
    r.attention = Matrix{{1, 0}, {0, 1}, {1, 0}};
    CHECK_THROWS_WITH_AS(validate_record(r), doctest::Contains("3x2"), ValidationError);
  }
  SUBCASE("word map out of range") {
    auto r = identity_record();
    r.src_word_map = {0, 2};
    CHECK_THROWS_WITH_AS(validate_record(r), doctest::Contains("src_word_map[1]"),
                         ValidationError);
    r.src_word_map = {0, -2};
    CHECK_THROWS_AS(validate_record(r), ValidationError);
  }
  SUBCASE("word map length mismatch") {
    auto r = identity_record();
    r.tgt_word_map = {0};
    CHECK_THROWS_AS(validate_record(r), ValidationError);
  }
  SUBCASE("negative layer") {
    auto r = identity_record();
    r.layer = -1;
    CHECK_THROWS_AS(validate_record(r), ValidationError);
  }
}

TEST_CASE("aggregation examples") {
  SUBCASE("1:1 maps leave the identity unchanged") {
    const auto w = aggregate_to_words(identity_record());
    CHECK(w.matrix == Matrix{{1, 0}, {0, 1}});
    CHECK(w.provenance == "s1");
    CHECK(w.uniform_rows.empty());
  }
  SUBCASE("two source subwords of one word are summed") {
    AttentionRecord r;
    r.id = "sum";
    r.src_tokens = {"a1", "a2"};
    r.tgt_tokens = {"x"};
    r.src_words = {"a"};
    r.tgt_words = {"x"};
    r.src_word_map = {0, 0};
    r.tgt_word_map = {0};
    r.attention = Matrix{{0.3, 0.7}};
    const auto w = aggregate_to_words(r);
    REQUIRE(w.matrix.rows() == 1);
    REQUIRE(w.matrix.cols() == 1);
    CHECK(w.matrix(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("two target subwords of one word are averaged") {
    AttentionRecord r;
    r.id = "mean";
    r.src_tokens = {"a", "b"};
    r.tgt_tokens = {"x1", "x2"};
    r.src_words = {"a", "b"};
    r.tgt_words = {"x"};
    r.src_word_map = {0, 1};
    r.tgt_word_map = {0, 0};
    r.attention = Matrix{{1, 0}, {0, 1}};
    const auto w = aggregate_to_words(r);
    CHECK(w.matrix(0, 0) == doctest::Approx(0.5));
    CHECK(w.matrix(0, 1) == doctest::Approx(0.5));
  }
  SUBCASE("special tokens are dropped before renormalizing") {
    AttentionRecord r;
    r.id = "eos";
    r.src_tokens = {"a", "b", "</s>"};
    r.tgt_tokens = {"x", "</s>"};
    r.src_words = {"a", "b"};
    r.tgt_words = {"x"};
    r.src_word_map = {0, 1, kNoWord};
    r.tgt_word_map = {0, kNoWord};
    r.attention = Matrix{{0.2, 0.2, 0.6}, {0.0, 0.0, 1.0}};
    const auto w = aggregate_to_words(r);
    CHECK(w.row_mass[0] == doctest::Approx(0.4));
    CHECK(w.matrix(0, 0) == doctest::Approx(0.5));
  }
  SUBCASE("zero-mass row becomes uniform and is flagged") {
    AttentionRecord r;
    r.id = "zero";
    r.src_tokens = {"a", "b", "</s>"};
    r.tgt_tokens = {"x"};
    r.src_words = {"a", "b"};
    r.tgt_words = {"x"};
    r.src_word_map = {0, 1, kNoWord};
    r.tgt_word_map = {0};
    r.attention = Matrix{{0.0, 0.0, 1.0}};
    const auto w = aggregate_to_words(r);
    CHECK(w.uniform_rows == std::vector<std::size_t>{0});
    CHECK(w.matrix(0, 0) == doctest::Approx(0.5));
  }
  SUBCASE("target word without subwords is an error naming it") {
    auto r = identity_record();
    r.tgt_words = {"x", "y", "z"};
    CHECK_THROWS_WITH_AS(aggregate_to_words(r), doctest::Contains("target word 2"),
                         ValidationError);
  }
}

namespace {

// Random valid record with random subword segmentation and special tokens.
AttentionRecord random_record(std::mt19937_64& rng, std::size_t k) {
  std::uniform_int_distribution<std::size_t> words(1, 5), pieces(1, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AttentionRecord r;
  r.id = "r" + std::to_string(k);
  r.layer = static_cast<int>(k % 4);
  r.head = static_cast<int>(k % 3) - 1;
  auto build = [&](std::vector<std::string>& ws, std::vector<std::string>& toks,
                   std::vector<int>& map) {
    const std::size_t n = words(rng);
    for (std::size_t w = 0; w < n; ++w) {
      ws.push_back("w" + std::to_string(w) + "\"é");
      for (std::size_t p = pieces(rng); p > 0; --p) {
        toks.push_back("p" + std::to_string(toks.size()));
        map.push_back(static_cast<int>(w));
      }
    }
    if (unit(rng) < 0.5) {
      toks.push_back("</s>");
      map.push_back(kNoWord);
    }
  };
  build(r.src_words, r.src_tokens, r.src_word_map);
  build(r.tgt_words, r.tgt_tokens, r.tgt_word_map);
  r.attention = Matrix(r.tgt_tokens.size(), r.src_tokens.size());
  for (std::size_t t = 0; t < r.attention.rows(); ++t) {
    double sum = 0.0;
    for (double& v : r.attention.row(t)) sum += (v = unit(rng) * unit(rng));
    for (double& v : r.attention.row(t)) v /= sum;
  }
  return r;
}

}  // namespace

TEST_CASE("property: serialize then parse is identity") {
  std::mt19937_64 rng(7);
  for (std::size_t k = 0; k < 300; ++k) {
    const auto r = random_record(rng, k);
    CHECK(parse_attention_record(serialize_attention_record(r)) == r);
  }
}

TEST_CASE("property: aggregated rows are stochastic and preserve mass") {
  std::mt19937_64 rng(11);
  for (std::size_t k = 0; k < 300; ++k) {
    const auto r = random_record(rng, k);
    const auto w = aggregate_to_words(r);
    for (std::size_t wt = 0; wt < w.matrix.rows(); ++wt) {
      double sum = 0.0;
      for (double v : w.matrix.row(wt)) sum += v;
      CHECK(std::abs(sum - 1.0) <= kWordRowSumTolerance);

      // Mean over the word's subword rows of their mass on real source words.
      double mass = 0.0;
      std::size_t n = 0;
      for (std::size_t t = 0; t < r.tgt_tokens.size(); ++t) {
        if (r.tgt_word_map[t] != static_cast<int>(wt)) continue;
        ++n;
        for (std::size_t s = 0; s < r.src_tokens.size(); ++s) {
          if (r.src_word_map[s] != kNoWord) mass += r.attention(t, s);
        }
      }
      CHECK(std::abs(w.row_mass[wt] - mass / static_cast<double>(n)) <= 1e-9);
    }
  }
}
