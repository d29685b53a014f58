#include "attn_audit/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "attn_audit/attention_io.hpp"
#include "attn_audit/error.hpp"
#include "attn_audit/ibm1.hpp"
#include "attn_audit/parallel.hpp"
#include "attn_audit/svg.hpp"

namespace attn_audit {
namespace fs = std::filesystem;

namespace {

void require_file(const fs::path& path, std::string_view what) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw ValidationError(fmt::format("{} not found: '{}'", what, path.string()));
  }
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open '{}'", path.string()));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<std::string> split_words(std::string_view line) {
  std::vector<std::string> words;
  std::istringstream in{std::string(line)};
  std::string w;
  while (in >> w) words.push_back(std::move(w));
  return words;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::string safe_file_part(std::string_view id) {
  std::string out;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  return out.empty() ? "_" : out;
}

std::optional<long long> as_integer(std::string_view text) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

// Numeric ids must be consecutive line indices, 0- or 1-based.
void cross_check_ids(const std::vector<AttentionRecord>& records) {
  std::vector<long long> ids;
  for (const auto& r : records) {
    auto v = as_integer(r.id);
    if (!v) return;
    ids.push_back(*v);
  }
  if (ids.empty()) return;
  const long long base = ids.front();
  if (base != 0 && base != 1) {
    throw ValidationError(fmt::format(
        "numeric record ids must start at 0 or 1 to pair with line numbers, found '{}'",
        records.front().id));
  }
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] != base + static_cast<long long>(k)) {
      throw ValidationError(fmt::format("record on position {} has id '{}', expected {}", k + 1,
                                        records[k].id, base + static_cast<long long>(k)));
    }
  }
}

std::vector<AttentionRecord> load_dump(const fs::path& path) {
  require_file(path, "attention dump");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open '{}'", path.string()));
  return parse_attention_dump(in);
}

std::string heatmap_for(const AttentionRecord& record, const NormalizationMode& mode,
                        MatrixLevel level) {
  const std::string title = fmt::format("{} ({})", record.id, describe(mode));
  if (level == MatrixLevel::subword) {
    return render_heatmap(normalize(record.attention, mode), record.tgt_tokens,
                          record.src_tokens, title);
  }
  return render_heatmap(normalize(aggregate_to_words(record).matrix, mode), record.tgt_words,
                        record.src_words, title);
}

}  // namespace

std::vector<std::vector<std::string>> read_corpus(const fs::path& path) {
  require_file(path, "corpus");
  std::vector<std::vector<std::string>> out;
  const auto lines = read_lines(path);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    auto words = split_words(lines[k]);
    if (words.empty()) {
      throw ValidationError(fmt::format("{}: line {} is empty", path.string(), k + 1));
    }
    out.push_back(std::move(words));
  }
  return out;
}

void cmd_align(const AlignOptions& options, std::ostream& out) {
  if (options.iterations == 0) throw UsageError("--iterations must be at least 1");
  const auto source = read_corpus(options.source);
  const auto target = read_corpus(options.target);
  if (source.size() != target.size()) {
    throw ValidationError(fmt::format("source has {} lines but target has {}", source.size(),
                                      target.size()));
  }
  if (source.empty()) throw ValidationError("corpora are empty");

  ParallelCorpus corpus;
  corpus.reserve(source.size());
  for (std::size_t k = 0; k < source.size(); ++k) corpus.push_back({source[k], target[k]});
  const auto alignments = align_corpus(corpus, options.iterations, options.symmetrization);

  std::string text;
  for (const auto& a : alignments) {
    text += serialize_pharaoh(a);
    text += '\n';
  }
  if (options.output.empty()) {
    out << text;
  } else {
    write_files_atomically({{options.output, text}});
  }
}

std::vector<std::pair<std::string, std::string>> report_figures(const Report& report,
                                                                std::size_t histogram_bins) {
  const auto& rows = report.per_sentence;
  const auto entropy = metric_column(rows, "h_avg");
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("entropy_vs_agreement.svg",
                   render_scatter(entropy, metric_column(rows, "agreement"),
                                  "average attention entropy (nats)", "alignment agreement",
                                  true, "Attention entropy vs. alignment agreement"));
  out.emplace_back("entropy_vs_meteor.svg",
                   render_scatter(entropy, metric_column(rows, "meteor"),
                                  "average attention entropy (nats)", "meteor-lite", true,
                                  "Attention entropy vs. METEOR (meteor-lite)"));
  out.emplace_back("entropy_histogram.svg",
                   render_histogram(histogram(entropy, histogram_bins),
                                    "average attention entropy (nats)",
                                    "Distribution of sentence attention entropy"));
  return out;
}

ScoreResult cmd_score(const ScoreOptions& o, std::ostream& log) {
  const bool builtin = o.builtin_aligner || o.train_source || o.train_target;
  if (builtin == o.alignments.has_value()) {
    throw UsageError(
        "configure exactly one alignment source: --alignments FILE or the built-in aligner");
  }
  if (o.train_source.has_value() != o.train_target.has_value()) {
    throw UsageError("--train-src and --train-tgt must be given together");
  }
  if (builtin && o.iterations == 0) throw UsageError("--iterations must be at least 1");
  if (o.formats.empty()) throw UsageError("at least one output format is required");
  if (o.histogram_bins == 0) throw UsageError("--bins must be at least 1");

  require_file(o.dump, "attention dump");
  require_file(o.references, "reference file");
  if (o.hypotheses) require_file(*o.hypotheses, "hypothesis file");
  if (o.alignments) require_file(*o.alignments, "alignment file");
  if (o.train_source) require_file(*o.train_source, "training source corpus");
  if (o.train_target) require_file(*o.train_target, "training target corpus");
  if (o.synonyms) require_file(*o.synonyms, "synonym table");

  const std::vector<AttentionRecord> records = load_dump(o.dump);
  if (records.empty()) throw ValidationError(fmt::format("'{}' has no records", o.dump.string()));

  for (const auto& r : records) {
    if (o.layer && r.layer != *o.layer) {
      throw ValidationError(fmt::format("record '{}' is from layer {}, but --layer {} was selected",
                                        r.id, r.layer, *o.layer));
    }
    if (o.head && r.head != *o.head) {
      throw ValidationError(fmt::format("record '{}' is from head {}, but --head {} was selected",
                                        r.id, r.head, *o.head));
    }
    if (r.layer != records.front().layer || r.head != records.front().head) {
      throw ValidationError(fmt::format(
          "record '{}' mixes layer/head {}/{} with {}/{}; a dump must hold one selection", r.id,
          r.layer, r.head, records.front().layer, records.front().head));
    }
  }
  cross_check_ids(records);

  const auto references = read_lines(o.references);
  if (references.size() != records.size()) {
    throw ValidationError(fmt::format("{} records but {} reference lines", records.size(),
                                      references.size()));
  }
  std::vector<std::string> hypotheses;
  if (o.hypotheses) {
    hypotheses = read_lines(*o.hypotheses);
    if (hypotheses.size() != records.size()) {
      throw ValidationError(fmt::format("{} records but {} hypothesis lines", records.size(),
                                        hypotheses.size()));
    }
  } else {
    for (const auto& r : records) hypotheses.push_back(join(r.tgt_words));
  }

  std::vector<AlignmentSet> alignment_lines;
  std::string alignment_source;
  if (o.alignments) {
    std::ifstream in(*o.alignments, std::ios::binary);
    alignment_lines = read_pharaoh(in);
    if (alignment_lines.size() != records.size()) {
      throw ValidationError(fmt::format("{} records but {} alignment lines", records.size(),
                                        alignment_lines.size()));
    }
    alignment_source = fmt::format("pharaoh file {}", o.alignments->filename().string());
  } else {
    ParallelCorpus corpus;
    if (o.train_source) {
      const auto src = read_corpus(*o.train_source);
      const auto tgt = read_corpus(*o.train_target);
      if (src.size() != tgt.size()) {
        throw ValidationError(fmt::format("training source has {} lines but target has {}",
                                          src.size(), tgt.size()));
      }
      for (std::size_t k = 0; k < src.size(); ++k) corpus.push_back({src[k], tgt[k]});
    }
    const std::size_t offset = corpus.size();
    for (const auto& r : records) corpus.push_back({r.src_words, r.tgt_words});
    auto all = align_corpus(corpus, o.iterations, o.symmetrization);
    alignment_lines.assign(all.begin() + static_cast<std::ptrdiff_t>(offset), all.end());
    alignment_source = fmt::format("built-in IBM Model 1, {} iterations, {}", o.iterations,
                                   to_string(o.symmetrization));
  }

  std::map<std::string, AlignmentSet> by_id;
  std::map<std::string, std::size_t> index_of;
  for (std::size_t k = 0; k < records.size(); ++k) {
    by_id.emplace(records[k].id, alignment_lines[k]);
    index_of.emplace(records[k].id, k);
  }

  SynonymTable synonyms;
  if (o.synonyms) {
    std::ifstream in(*o.synonyms, std::ios::binary);
    synonyms = read_synonyms(in);
  }

  CorpusMetricsOptions cm_options;
  cm_options.normalization = o.normalization;
  cm_options.skip_unaligned = o.skip_unaligned;
  const CorpusMetricsResult cm = corpus_metrics(records, by_id, cm_options);
  for (const auto& id : cm.skipped) {
    log << fmt::format("warning: skipping '{}': no alignment pairs\n", id);
  }
  if (cm.rows.empty()) throw ValidationError("no sentence could be scored");

  struct Quality {
    TokenSequence hyp, ref;
    double bleu, meteor;
  };
  const auto quality = parallel_map(cm.rows.size(), [&](std::size_t k) {
    const std::size_t line = index_of.at(cm.rows[k].id);
    Quality q{tokenize(hypotheses[line]), tokenize(references[line]), 0.0, 0.0};
    if (q.ref.empty()) {
      throw ValidationError(fmt::format("reference line {} is empty", line + 1));
    }
    q.bleu = sentence_bleu(q.hyp, q.ref).score;
    q.meteor = meteor(q.hyp, q.ref, &synonyms).score;
    return q;
  });

  std::vector<TokenSequence> hyp_tokens, ref_tokens;
  std::vector<SentenceMetrics> rows;
  for (std::size_t k = 0; k < cm.rows.size(); ++k) {
    const auto& ir = cm.rows[k];
    hyp_tokens.push_back(quality[k].hyp);
    ref_tokens.push_back(quality[k].ref);
    rows.push_back({ir.id, ir.h_avg, ir.h_norm, ir.agreement, quality[k].bleu, quality[k].meteor,
                    ir.src_len, ir.tgt_len});
  }
  const BleuBreakdown pooled = corpus_bleu(hyp_tokens, ref_tokens, o.smoothing);

  ReportMetadata meta;
  meta.layer = records.front().layer;
  meta.head = records.front().head;
  meta.normalization = describe(o.normalization);
  meta.aggregation_policy = std::string(kAggregationPolicy);
  meta.agreement_pooling =
      o.pooling == AgreementPooling::per_sentence ? "per-sentence" : "pooled";
  if (o.pooling == AgreementPooling::pooled) {
    meta.pooled_agreement = corpus_agreement(cm.rows, AgreementPooling::pooled);
  }
  meta.corpus_bleu_smoothing = std::string(to_string(o.smoothing));
  meta.alignment_source = alignment_source;
  meta.skipped = cm.skipped;

  ScoreResult result{build_report(std::move(rows), pooled, std::move(meta)), {}};

  std::vector<std::pair<fs::path, std::string>> files;
  if (o.formats.count(ReportFormat::csv)) {
    files.emplace_back(o.out_dir / "report.csv", report_to_csv(result.report));
  }
  if (o.formats.count(ReportFormat::json)) {
    files.emplace_back(o.out_dir / "report.json", report_to_json(result.report));
  }
  if (o.formats.count(ReportFormat::svg)) {
    for (auto& [name, svg] : report_figures(result.report, o.histogram_bins)) {
      files.emplace_back(o.out_dir / name, std::move(svg));
    }
  }
  for (const auto& id : o.viz_sentences) {
    auto it = index_of.find(id);
    if (it == index_of.end()) {
      throw ValidationError(fmt::format("--viz-sentence '{}' is not in the dump", id));
    }
    files.emplace_back(o.out_dir / fmt::format("heatmap_{}.svg", safe_file_part(id)),
                       heatmap_for(records[it->second], o.normalization, MatrixLevel::word));
  }

  write_files_atomically(files);
  for (const auto& f : files) result.written.push_back(f.first);
  return result;
}

fs::path cmd_viz(const VizOptions& o) {
  const auto records = load_dump(o.dump);
  auto it = std::find_if(records.begin(), records.end(),
                         [&](const AttentionRecord& r) { return r.id == o.id; });
  if (it == records.end()) {
    throw ValidationError(fmt::format("id '{}' is not in '{}'", o.id, o.dump.string()));
  }
  const fs::path target =
      !o.output.empty()
          ? o.output
          : o.out_dir / fmt::format("heatmap_{}_{}.svg", safe_file_part(o.id),
                                    to_string(o.normalization.kind));
  write_files_atomically({{target, heatmap_for(*it, o.normalization, o.level)}});
  return target;
}

CorrelationResult cmd_correlate(const CorrelateOptions& o, std::ostream& out) {
  require_file(o.csv, "CSV file");
  std::ifstream xs(o.csv, std::ios::binary);
  const auto x = read_csv_column(xs, o.x);
  std::ifstream ys(o.csv, std::ios::binary);
  const auto y = read_csv_column(ys, o.y);
  const CorrelationResult r = pearson(x, y, o.x, o.y);
  nlohmann::ordered_json j;
  j["x"] = r.x_label;
  j["y"] = r.y_label;
  j["rho"] = r.rho;
  j["n"] = r.n;
  j["degenerate"] = r.degenerate;
  out << j.dump() << '\n';
  return r;
}

std::vector<fs::path> cmd_report(const ReportOptions& o) {
  require_file(o.report, "report");
  if (o.histogram_bins == 0) throw UsageError("--bins must be at least 1");
  const Report report = report_from_json(read_file(o.report));
  if (report.per_sentence.empty()) throw ValidationError("report has no sentences");

  std::vector<std::pair<fs::path, std::string>> files;
  if (o.formats.count(ReportFormat::csv)) {
    files.emplace_back(o.out_dir / "report.csv", report_to_csv(report));
  }
  if (o.formats.count(ReportFormat::json)) {
    files.emplace_back(o.out_dir / "report.json", report_to_json(report));
  }
  if (o.formats.count(ReportFormat::svg)) {
    for (auto& [name, svg] : report_figures(report, o.histogram_bins)) {
      files.emplace_back(o.out_dir / name, std::move(svg));
    }
  }
  write_files_atomically(files);
  std::vector<fs::path> written;
  for (const auto& f : files) written.push_back(f.first);
  return written;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attention explainability audit: entropy, alignment agreement, BLEU, "
               "meteor-lite and their correlations.",
               "attn-audit"};
  app.require_subcommand(1);

  // align
  AlignOptions align;
  std::string align_sym = "intersection";
  auto* align_cmd = app.add_subcommand("align", "Train IBM Model 1 both ways and write Pharaoh "
                                                "alignments");
  align_cmd->add_option("--src", align.source, "Source corpus, one sentence per line")->required();
  align_cmd->add_option("--tgt", align.target, "Target corpus, line-aligned with --src")
      ->required();
  align_cmd->add_option("--iterations", align.iterations, "EM iterations (>= 1)")
      ->capture_default_str();
  align_cmd->add_option("--sym", align_sym, "intersection|union")->capture_default_str();
  align_cmd->add_option("-o,--output", align.output, "Output file (default: stdout)");

  // score
  ScoreOptions score;
  std::string score_alignments, score_hyps, score_train_src, score_train_tgt, score_synonyms;
  std::string score_norm = "raw", score_smoothing = "none", score_sym = "intersection";
  std::string score_pooling = "per-sentence", score_format = "csv,json,svg";
  double score_temperature = 1.0;
  int score_layer = 0, score_head = 0;
  auto* score_cmd = app.add_subcommand("score", "Score a dump against references and alignments");
  score_cmd->add_option("--dump", score.dump, "Attention dump (one record per line)")->required();
  score_cmd->add_option("--refs", score.references, "Reference translations, line-aligned")
      ->required();
  score_cmd->add_option("--hyps", score_hyps,
                        "Hypothesis translations (default: the dump's target words)");
  score_cmd->add_option("--alignments", score_alignments, "Pharaoh alignment file");
  score_cmd->add_flag("--builtin-aligner", score.builtin_aligner,
                      "Align with the built-in IBM Model 1 instead of --alignments");
  score_cmd->add_option("--train-src", score_train_src,
                        "Extra source corpus for the built-in aligner");
  score_cmd->add_option("--train-tgt", score_train_tgt,
                        "Extra target corpus for the built-in aligner");
  score_cmd->add_option("--iterations", score.iterations, "Built-in aligner EM iterations")
      ->capture_default_str();
  score_cmd->add_option("--sym", score_sym, "intersection|union")->capture_default_str();
  auto* layer_opt = score_cmd->add_option("--layer", score_layer, "Required layer of all records");
  auto* head_opt =
      score_cmd->add_option("--head", score_head, "Required head of all records (-1 = mean)");
  score_cmd->add_option("--norm", score_norm, "raw|row|softmax, applied to word attention")
      ->capture_default_str();
  score_cmd->add_option("--temperature", score_temperature, "Softmax temperature")
      ->capture_default_str();
  score_cmd->add_option("--smoothing", score_smoothing, "Corpus BLEU smoothing: none|add-epsilon")
      ->capture_default_str();
  score_cmd->add_option("--agreement-pooling", score_pooling,
                        "Also report agreement pooled over all pairs: per-sentence|pooled")
      ->capture_default_str();
  score_cmd->add_option("--synonyms", score_synonyms, "Synonym table for meteor-lite");
  score_cmd->add_option("--out", score.out_dir, "Output directory")->capture_default_str();
  score_cmd->add_option("--format", score_format, "Comma-separated subset of csv,json,svg")
      ->capture_default_str();
  score_cmd->add_option("--viz-sentence", score.viz_sentences,
                        "Also render the word-level heatmap of this id (repeatable)");
  score_cmd->add_option("--bins", score.histogram_bins, "Entropy histogram bins")
      ->capture_default_str();
  score_cmd->add_flag("--skip-unaligned", score.skip_unaligned,
                      "Skip sentences with no alignment pairs instead of failing");

  // viz
  VizOptions viz;
  std::string viz_norm = "raw", viz_level = "subword";
  double viz_temperature = 1.0;
  auto* viz_cmd = app.add_subcommand("viz", "Render one sentence's attention heatmap");
  viz_cmd->add_option("--dump", viz.dump, "Attention dump")->required();
  viz_cmd->add_option("--id", viz.id, "Record id")->required();
  viz_cmd->add_option("--norm", viz_norm, "raw|row|column|softmax")->capture_default_str();
  viz_cmd->add_option("--temperature", viz_temperature, "Softmax temperature")
      ->capture_default_str();
  viz_cmd->add_option("--level", viz_level, "subword|word")->capture_default_str();
  viz_cmd->add_option("-o,--output", viz.output, "Output SVG file");
  viz_cmd->add_option("--out", viz.out_dir, "Output directory when -o is not given")
      ->capture_default_str();

  // correlate
  CorrelateOptions correlate;
  auto* correlate_cmd =
      app.add_subcommand("correlate", "Pearson correlation of two columns of a CSV file");
  correlate_cmd->add_option("--csv", correlate.csv, "CSV file with a header row")->required();
  correlate_cmd->add_option("-x,--x", correlate.x, "First column")->required();
  correlate_cmd->add_option("-y,--y", correlate.y, "Second column")->required();

  // report
  ReportOptions report;
  std::string report_format = "csv,json,svg";
  auto* report_cmd = app.add_subcommand("report", "Re-render outputs from a saved report.json");
  report_cmd->add_option("--report", report.report, "report.json written by score")->required();
  report_cmd->add_option("--out", report.out_dir, "Output directory")->capture_default_str();
  report_cmd->add_option("--format", report_format, "Comma-separated subset of csv,json,svg")
      ->capture_default_str();
  report_cmd->add_option("--bins", report.histogram_bins, "Entropy histogram bins")
      ->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (align_cmd->parsed()) {
      align.symmetrization = parse_symmetrization(align_sym);
      cmd_align(align, out);
    } else if (score_cmd->parsed()) {
      if (!score_hyps.empty()) score.hypotheses = score_hyps;
      if (!score_alignments.empty()) score.alignments = score_alignments;
      if (!score_train_src.empty()) score.train_source = score_train_src;
      if (!score_train_tgt.empty()) score.train_target = score_train_tgt;
      if (!score_synonyms.empty()) score.synonyms = score_synonyms;
      if (layer_opt->count()) score.layer = score_layer;
      if (head_opt->count()) score.head = score_head;
      score.symmetrization = parse_symmetrization(score_sym);
      score.normalization = {parse_norm_kind(score_norm), score_temperature};
      if (!(score_temperature > 0.0)) throw UsageError("--temperature must be > 0");
      score.smoothing = parse_smoothing(score_smoothing);
      if (score_pooling == "per-sentence") score.pooling = AgreementPooling::per_sentence;
      else if (score_pooling == "pooled") score.pooling = AgreementPooling::pooled;
      else throw UsageError("--agreement-pooling must be per-sentence or pooled");
      score.formats = parse_formats(score_format);
      const auto result = cmd_score(score, err);
      for (const auto& p : result.written) out << p.string() << '\n';
    } else if (viz_cmd->parsed()) {
      viz.normalization = {parse_norm_kind(viz_norm), viz_temperature};
      if (!(viz_temperature > 0.0)) throw UsageError("--temperature must be > 0");
      if (viz_level == "subword") viz.level = MatrixLevel::subword;
      else if (viz_level == "word") viz.level = MatrixLevel::word;
      else throw UsageError("--level must be subword or word");
      out << cmd_viz(viz).string() << '\n';
    } else if (correlate_cmd->parsed()) {
      cmd_correlate(correlate, out);
    } else if (report_cmd->parsed()) {
      report.formats = parse_formats(report_format);
      for (const auto& p : cmd_report(report)) out << p.string() << '\n';
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInternal;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace attn_audit
