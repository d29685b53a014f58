#include "attn_audit/report.hpp"

#include <charconv>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "attn_audit/error.hpp"

namespace attn_audit {
namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr double kRangeSlack = 1e-9;

void check_range(const SentenceMetrics& r, std::string_view name, double v, double lo,
                 double hi) {
  if (!(v >= lo - kRangeSlack && v <= hi + kRangeSlack)) {
    throw ValidationError(
        fmt::format("sentence '{}': {} = {} is outside [{}, {}]", r.id, name, v, lo, hi));
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

double parse_double(const std::string& text, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(fmt::format("not a number: '{}'", text), line);
  }
  return v;
}

std::size_t parse_size(const std::string& text, std::size_t line) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(fmt::format("not a non-negative integer: '{}'", text), line);
  }
  return v;
}

ordered_json bleu_to_json(const BleuBreakdown& b) {
  ordered_json j;
  j["score"] = b.score;
  j["brevity_penalty"] = b.brevity_penalty;
  j["hyp_len"] = b.hyp_len;
  j["ref_len"] = b.ref_len;
  j["precisions"] = b.precisions;
  ordered_json matches = ordered_json::array(), totals = ordered_json::array();
  for (const auto& m : b.ngrams) {
    matches.push_back(m.matches);
    totals.push_back(m.total);
  }
  j["matches"] = matches;
  j["totals"] = totals;
  j["degenerate"] = b.degenerate;
  return j;
}

BleuBreakdown bleu_from_json(const ordered_json& j) {
  BleuBreakdown b;
  b.score = j.at("score").get<double>();
  b.brevity_penalty = j.at("brevity_penalty").get<double>();
  b.hyp_len = j.at("hyp_len").get<std::size_t>();
  b.ref_len = j.at("ref_len").get<std::size_t>();
  b.precisions = j.at("precisions").get<std::array<double, kMaxOrder>>();
  const auto matches = j.at("matches").get<std::array<std::size_t, kMaxOrder>>();
  const auto totals = j.at("totals").get<std::array<std::size_t, kMaxOrder>>();
  for (std::size_t n = 0; n < kMaxOrder; ++n) b.ngrams[n] = {matches[n], totals[n]};
  b.degenerate = j.at("degenerate").get<bool>();
  return b;
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& correlation_pairs() {
  static const std::vector<std::pair<std::string, std::string>> pairs = {
      {"h_avg", "agreement"}, {"h_avg", "meteor"},     {"h_avg", "bleu"},
      {"agreement", "bleu"},  {"agreement", "meteor"},
  };
  return pairs;
}

std::vector<double> metric_column(const std::vector<SentenceMetrics>& rows,
                                  std::string_view name) {
  double SentenceMetrics::*field = nullptr;
  std::size_t SentenceMetrics::*count = nullptr;
  if (name == "h_avg") field = &SentenceMetrics::h_avg;
  else if (name == "h_norm") field = &SentenceMetrics::h_norm;
  else if (name == "agreement") field = &SentenceMetrics::agreement;
  else if (name == "bleu") field = &SentenceMetrics::bleu;
  else if (name == "meteor") field = &SentenceMetrics::meteor;
  else if (name == "src_len") count = &SentenceMetrics::src_len;
  else if (name == "tgt_len") count = &SentenceMetrics::tgt_len;
  else throw UsageError(fmt::format("unknown metric column '{}'", name));

  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    out.push_back(field ? r.*field : static_cast<double>(r.*count));
  }
  return out;
}

Report build_report(std::vector<SentenceMetrics> rows, const BleuBreakdown& pooled_bleu,
                    ReportMetadata metadata) {
  if (rows.empty()) throw ValidationError("cannot build a report from zero sentences");
  std::unordered_set<std::string> ids;
  for (const auto& r : rows) {
    if (!ids.insert(r.id).second) throw DuplicateIdError(r.id);
    check_range(r, "h_avg", r.h_avg, 0.0, std::numeric_limits<double>::infinity());
    check_range(r, "h_norm", r.h_norm, 0.0, 1.0);
    check_range(r, "agreement", r.agreement, 0.0, 1.0);
    check_range(r, "bleu", r.bleu, 0.0, 1.0);
    check_range(r, "meteor", r.meteor, 0.0, 1.0);
  }

  Report report;
  report.per_sentence = std::move(rows);
  report.metadata = std::move(metadata);
  const auto& ps = report.per_sentence;
  auto& agg = report.aggregates;
  agg.corpus_bleu = pooled_bleu;
  agg.mean_meteor = mean(metric_column(ps, "meteor"));
  agg.mean_bleu = mean(metric_column(ps, "bleu"));
  agg.mean_h_avg = mean(metric_column(ps, "h_avg"));
  agg.mean_h_norm = mean(metric_column(ps, "h_norm"));
  agg.mean_agreement = mean(metric_column(ps, "agreement"));

  for (const auto& [x, y] : correlation_pairs()) {
    if (ps.size() < 2) {
      CorrelationResult c;
      c.n = ps.size();
      c.x_label = x;
      c.y_label = y;
      c.degenerate = true;
      report.correlations.push_back(std::move(c));
    } else {
      report.correlations.push_back(pearson(metric_column(ps, x), metric_column(ps, y), x, y));
    }
  }
  return report;
}

std::string report_to_csv(const Report& report) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : report.per_sentence) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", csv_field(r.id), r.h_avg, r.h_norm,
                       r.agreement, r.bleu, r.meteor, r.src_len, r.tgt_len);
  }
  return out;
}

std::string report_to_json(const Report& report) {
  ordered_json j;
  const auto& m = report.metadata;
  ordered_json meta;
  meta["layer"] = m.layer;
  meta["head"] = m.head;
  meta["normalization"] = m.normalization;
  meta["aggregation_policy"] = m.aggregation_policy;
  meta["entropy_scale"] = m.entropy_scale;
  meta["normalized_entropy"] = m.normalized_entropy;
  meta["agreement_pooling"] = m.agreement_pooling;
  meta["pooled_agreement"] = m.pooled_agreement ? ordered_json(*m.pooled_agreement) : nullptr;
  meta["correlation_unit"] = m.correlation_unit;
  meta["corpus_bleu"] = m.corpus_bleu;
  meta["corpus_bleu_smoothing"] = m.corpus_bleu_smoothing;
  meta["sentence_bleu_smoothing"] = m.sentence_bleu_smoothing;
  meta["meteor_variant"] = m.meteor_variant;
  meta["alignment_source"] = m.alignment_source;
  meta["skipped"] = m.skipped;
  j["metadata"] = meta;

  const auto& a = report.aggregates;
  ordered_json agg;
  agg["sentence_count"] = report.per_sentence.size();
  agg["corpus_bleu"] = bleu_to_json(a.corpus_bleu);
  agg["mean_bleu"] = a.mean_bleu;
  agg["mean_meteor"] = a.mean_meteor;
  agg["mean_h_avg"] = a.mean_h_avg;
  agg["mean_h_norm"] = a.mean_h_norm;
  agg["mean_agreement"] = a.mean_agreement;
  j["aggregates"] = agg;

  ordered_json corr = ordered_json::array();
  for (const auto& c : report.correlations) {
    ordered_json e;
    e["x"] = c.x_label;
    e["y"] = c.y_label;
    e["rho"] = c.rho;
    e["n"] = c.n;
    e["degenerate"] = c.degenerate;
    corr.push_back(e);
  }
  j["correlations"] = corr;

  ordered_json rows = ordered_json::array();
  for (const auto& r : report.per_sentence) {
    ordered_json e;
    e["id"] = r.id;
    e["h_avg"] = r.h_avg;
    e["h_norm"] = r.h_norm;
    e["agreement"] = r.agreement;
    e["bleu"] = r.bleu;
    e["meteor"] = r.meteor;
    e["src_len"] = r.src_len;
    e["tgt_len"] = r.tgt_len;
    rows.push_back(e);
  }
  j["per_sentence"] = rows;
  return j.dump(2) + "\n";
}

Report report_from_json(std::string_view text) {
  try {
    const ordered_json j = ordered_json::parse(text.begin(), text.end());
    Report report;
    const auto& meta = j.at("metadata");
    auto& m = report.metadata;
    m.layer = meta.at("layer").get<int>();
    m.head = meta.at("head").get<int>();
    m.normalization = meta.at("normalization").get<std::string>();
    m.aggregation_policy = meta.at("aggregation_policy").get<std::string>();
    m.entropy_scale = meta.at("entropy_scale").get<std::string>();
    m.normalized_entropy = meta.at("normalized_entropy").get<std::string>();
    m.agreement_pooling = meta.at("agreement_pooling").get<std::string>();
    if (!meta.at("pooled_agreement").is_null()) {
      m.pooled_agreement = meta.at("pooled_agreement").get<double>();
    }
    m.correlation_unit = meta.at("correlation_unit").get<std::string>();
    m.corpus_bleu = meta.at("corpus_bleu").get<std::string>();
    m.corpus_bleu_smoothing = meta.at("corpus_bleu_smoothing").get<std::string>();
    m.sentence_bleu_smoothing = meta.at("sentence_bleu_smoothing").get<std::string>();
    m.meteor_variant = meta.at("meteor_variant").get<std::string>();
    m.alignment_source = meta.at("alignment_source").get<std::string>();
    m.skipped = meta.at("skipped").get<std::vector<std::string>>();

    const auto& agg = j.at("aggregates");
    auto& a = report.aggregates;
    a.corpus_bleu = bleu_from_json(agg.at("corpus_bleu"));
    a.mean_bleu = agg.at("mean_bleu").get<double>();
    a.mean_meteor = agg.at("mean_meteor").get<double>();
    a.mean_h_avg = agg.at("mean_h_avg").get<double>();
    a.mean_h_norm = agg.at("mean_h_norm").get<double>();
    a.mean_agreement = agg.at("mean_agreement").get<double>();

    for (const auto& e : j.at("correlations")) {
      CorrelationResult c;
      c.x_label = e.at("x").get<std::string>();
      c.y_label = e.at("y").get<std::string>();
      c.rho = e.at("rho").get<double>();
      c.n = e.at("n").get<std::size_t>();
      c.degenerate = e.at("degenerate").get<bool>();
      report.correlations.push_back(std::move(c));
    }
    for (const auto& e : j.at("per_sentence")) {
      SentenceMetrics r;
      r.id = e.at("id").get<std::string>();
      r.h_avg = e.at("h_avg").get<double>();
      r.h_norm = e.at("h_norm").get<double>();
      r.agreement = e.at("agreement").get<double>();
      r.bleu = e.at("bleu").get<double>();
      r.meteor = e.at("meteor").get<double>();
      r.src_len = e.at("src_len").get<std::size_t>();
      r.tgt_len = e.at("tgt_len").get<std::size_t>();
      report.per_sentence.push_back(std::move(r));
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("malformed report: {}", e.what()));
  }
}

std::vector<SentenceMetrics> rows_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ParseError(fmt::format("report CSV must start with '{}'", kCsvHeader), 1);
  }
  std::vector<SentenceMetrics> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) {
      throw ParseError(fmt::format("expected 8 columns, found {}", f.size()), number);
    }
    SentenceMetrics r;
    r.id = f[0];
    r.h_avg = parse_double(f[1], number);
    r.h_norm = parse_double(f[2], number);
    r.agreement = parse_double(f[3], number);
    r.bleu = parse_double(f[4], number);
    r.meteor = parse_double(f[5], number);
    r.src_len = parse_size(f[6], number);
    r.tgt_len = parse_size(f[7], number);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<double> read_csv_column(std::istream& in, std::string_view column) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("CSV has no header line", 1);
  const auto header = split_csv_line(line);
  std::size_t index = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == column) index = i;
  }
  if (index == header.size()) {
    throw UsageError(fmt::format("CSV has no column '{}'", column));
  }
  std::vector<double> out;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw ParseError(fmt::format("expected {} columns, found {}", header.size(), f.size()),
                       number);
    }
    out.push_back(parse_double(f[index], number));
  }
  return out;
}

std::set<ReportFormat> parse_formats(std::string_view list) {
  std::set<ReportFormat> out;
  while (!list.empty()) {
    const auto comma = list.find(',');
    const std::string_view item = list.substr(0, comma);
    if (item == "csv") out.insert(ReportFormat::csv);
    else if (item == "json") out.insert(ReportFormat::json);
    else if (item == "svg") out.insert(ReportFormat::svg);
    else throw UsageError(fmt::format("unknown format '{}' (expected csv,json,svg)", item));
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  if (out.empty()) throw UsageError("at least one output format is required");
  return out;
}

std::vector<fs::path> write_report(const Report& report, const fs::path& dir,
                                   const std::set<ReportFormat>& formats) {
  std::vector<std::pair<fs::path, std::string>> files;
  if (formats.count(ReportFormat::csv)) files.emplace_back(dir / "report.csv", report_to_csv(report));
  if (formats.count(ReportFormat::json)) {
    files.emplace_back(dir / "report.json", report_to_json(report));
  }
  if (files.empty()) throw UsageError("write_report needs csv or json among the formats");
  write_files_atomically(files);
  std::vector<fs::path> paths;
  for (const auto& f : files) paths.push_back(f.first);
  return paths;
}

void write_files_atomically(const std::vector<std::pair<fs::path, std::string>>& files) {
  std::vector<fs::path> temps;
  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& t : temps) fs::remove(t, ec);
  };
  for (const auto& [path, content] : files) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    fs::path temp = path;
    temp += ".partial";
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (out) temps.push_back(temp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) {
      cleanup();
      throw IoError(fmt::format("cannot write '{}'", path.string()));
    }
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    std::error_code ec;
    fs::rename(temps[i], files[i].first, ec);
    if (ec) {
      cleanup();
      throw IoError(fmt::format("cannot write '{}': {}", files[i].first.string(), ec.message()));
    }
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace attn_audit
