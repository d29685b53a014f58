#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "attn_audit/alignment.hpp"
#include "attn_audit/attention_io.hpp"

namespace fixture {

struct BlendOptions {
  std::size_t sentences = 200;
  std::uint64_t seed = 20241014;
  std::size_t min_words = 3;
  std::size_t max_words = 8;
  std::size_t vocabulary = 40;
};

// Synthetic corpus whose attention is, per sentence, a convex blend
// lambda * one-hot(aligned source word) + (1 - lambda) * uniform, with lambda
// drawn uniformly from [0, 1]. Words are split into one or two subwords and
// both sides end in an EOS token mapped to -1. Target word j of a sentence
// translates source word pi(j) through a fixed 1:1 dictionary, so the
// generating alignment is also recoverable by the built-in aligner.
struct BlendFixture {
  std::vector<attn_audit::AttentionRecord> records;
  std::vector<attn_audit::AlignmentSet> alignments;
  std::vector<std::string> hypotheses;
  std::vector<std::string> references;
  std::vector<double> lambdas;
};

BlendFixture make_blend_fixture(const BlendOptions& options = {});

struct FixturePaths {
  std::filesystem::path dump, alignments, hypotheses, references, source, target;
};

// Writes dump.jsonl, align.txt, hyps.txt, refs.txt, src.txt and tgt.txt.
FixturePaths write_fixture(const BlendFixture& fixture, const std::filesystem::path& dir);

// Fresh, empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace fixture
