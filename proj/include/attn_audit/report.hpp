#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "attn_audit/quality.hpp"
#include "attn_audit/stats.hpp"

namespace attn_audit {

struct SentenceMetrics {
  std::string id;
  double h_avg = 0.0;   // nats
  double h_norm = 0.0;  // h_avg / ln(source words)
  double agreement = 0.0;
  double bleu = 0.0;
  double meteor = 0.0;
  std::size_t src_len = 0;
  std::size_t tgt_len = 0;

  friend bool operator==(const SentenceMetrics&, const SentenceMetrics&) = default;
};

struct ReportMetadata {
  int layer = 0;
  int head = -1;
  std::string normalization = "raw";
  std::string aggregation_policy;
  std::string entropy_scale = "nats";
  std::string normalized_entropy = "h_avg / ln(source word count)";
  std::string agreement_pooling = "per-sentence";
  std::optional<double> pooled_agreement;
  std::string correlation_unit = "sentence";
  std::string corpus_bleu = "pooled over sentences, not averaged";
  std::string corpus_bleu_smoothing = "none";
  std::string sentence_bleu_smoothing = "add-epsilon";
  std::string meteor_variant{kMeteorVariant};
  std::string alignment_source;
  std::vector<std::string> skipped;

  friend bool operator==(const ReportMetadata&, const ReportMetadata&) = default;
};

struct ReportAggregates {
  BleuBreakdown corpus_bleu;
  double mean_meteor = 0.0;
  double mean_bleu = 0.0;
  double mean_h_avg = 0.0;
  double mean_h_norm = 0.0;
  double mean_agreement = 0.0;

  friend bool operator==(const ReportAggregates&, const ReportAggregates&) = default;
};

struct Report {
  std::vector<SentenceMetrics> per_sentence;
  ReportAggregates aggregates;
  std::vector<CorrelationResult> correlations;
  ReportMetadata metadata;

  friend bool operator==(const Report&, const Report&) = default;
};

// The (x, y) metric pairs build_report correlates, by CSV column name.
const std::vector<std::pair<std::string, std::string>>& correlation_pairs();

// Named metric column across rows ("h_avg", "h_norm", "agreement", "bleu",
// "meteor", "src_len", "tgt_len"); throws UsageError on an unknown name.
std::vector<double> metric_column(const std::vector<SentenceMetrics>& rows,
                                  std::string_view name);

// Computes means and correlations from the rows. Throws ValidationError on
// empty rows, a duplicate id, or a metric outside its range.
Report build_report(std::vector<SentenceMetrics> rows, const BleuBreakdown& pooled_bleu,
                    ReportMetadata metadata = {});

inline constexpr std::string_view kCsvHeader = "id,h_avg,h_norm,agreement,bleu,meteor,src_len,tgt_len";

std::string report_to_csv(const Report& report);
std::string report_to_json(const Report& report);
Report report_from_json(std::string_view text);
// Parses the per-sentence CSV written by report_to_csv.
std::vector<SentenceMetrics> rows_from_csv(std::istream& in);

// Generic CSV column access for `correlate`: header names -> numeric column.
std::vector<double> read_csv_column(std::istream& in, std::string_view column);

enum class ReportFormat { csv, json, svg };

// Comma-separated subset of csv,json,svg.
std::set<ReportFormat> parse_formats(std::string_view list);

// Writes report.csv and/or report.json under `dir` (svg is ignored here).
// Returns the written paths.
std::vector<std::filesystem::path> write_report(const Report& report,
                                                const std::filesystem::path& dir,
                                                const std::set<ReportFormat>& formats);

// Writes every file or none: contents go to temporary siblings first and are
// renamed into place only once all writes succeeded. Throws IoError.
void write_files_atomically(
    const std::vector<std::pair<std::filesystem::path, std::string>>& files);

std::string read_file(const std::filesystem::path& path);

}  // namespace attn_audit
