#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "attn_audit/alignment.hpp"
#include "attn_audit/interpretability.hpp"
#include "attn_audit/normalization.hpp"
#include "attn_audit/quality.hpp"
#include "attn_audit/report.hpp"

namespace attn_audit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

struct AlignOptions {
  std::filesystem::path source;
  std::filesystem::path target;
  std::size_t iterations = 10;
  Symmetrization symmetrization = Symmetrization::intersection;
  // Empty = write to the command's output stream.
  std::filesystem::path output;
};

// Reads one whitespace-tokenized sentence per line. Throws ValidationError
// on an empty line.
std::vector<std::vector<std::string>> read_corpus(const std::filesystem::path& path);

// Trains forward and reverse IBM Model 1 and writes one Pharaoh line per
// sentence pair.
void cmd_align(const AlignOptions& options, std::ostream& out);

// Everything `score` needs. Exactly one of `alignments` or the pair
// `train_source`/`train_target` (built-in aligner) must be set; with
// `builtin_aligner` and no training corpora the aligner trains on the dump's
// own word sequences.
struct ScoreOptions {
  std::filesystem::path dump;
  std::filesystem::path references;
  std::optional<std::filesystem::path> hypotheses;
  std::optional<std::filesystem::path> alignments;
  bool builtin_aligner = false;
  std::optional<std::filesystem::path> train_source;
  std::optional<std::filesystem::path> train_target;
  std::size_t iterations = 10;
  Symmetrization symmetrization = Symmetrization::intersection;
  std::optional<int> layer;
  std::optional<int> head;
  NormalizationMode normalization = NormalizationMode::raw();
  Smoothing smoothing = Smoothing::none;
  AgreementPooling pooling = AgreementPooling::per_sentence;
  std::optional<std::filesystem::path> synonyms;
  std::filesystem::path out_dir = ".";
  std::set<ReportFormat> formats = {ReportFormat::csv, ReportFormat::json, ReportFormat::svg};
  std::vector<std::string> viz_sentences;
  std::size_t histogram_bins = 10;
  bool skip_unaligned = false;
};

struct ScoreResult {
  Report report;
  std::vector<std::filesystem::path> written;
};

// Runs the full pipeline and writes all outputs, or none if anything fails.
ScoreResult cmd_score(const ScoreOptions& options, std::ostream& log);

enum class MatrixLevel { subword, word };

struct VizOptions {
  std::filesystem::path dump;
  std::string id;
  NormalizationMode normalization = NormalizationMode::raw();
  MatrixLevel level = MatrixLevel::subword;
  // Target file; when empty, <out_dir>/heatmap_<id>_<mode>.svg.
  std::filesystem::path output;
  std::filesystem::path out_dir = ".";
};

std::filesystem::path cmd_viz(const VizOptions& options);

struct CorrelateOptions {
  std::filesystem::path csv;
  std::string x;
  std::string y;
};

CorrelationResult cmd_correlate(const CorrelateOptions& options, std::ostream& out);

struct ReportOptions {
  std::filesystem::path report;
  std::filesystem::path out_dir = ".";
  std::set<ReportFormat> formats = {ReportFormat::csv, ReportFormat::json, ReportFormat::svg};
  std::size_t histogram_bins = 10;
};

// Re-renders CSV/JSON/figures from a saved report.json.
std::vector<std::filesystem::path> cmd_report(const ReportOptions& options);

// Figures derived from a report alone (scatters and the entropy histogram),
// keyed by file name.
std::vector<std::pair<std::string, std::string>> report_figures(const Report& report,
                                                                std::size_t histogram_bins);

// Full command-line entry point; args[0] is the program name. Returns the
// process exit code (0 ok, 1 internal error, 2 usage/validation error).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace attn_audit
