#include "revsent/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "revsent/error.hpp"
#include "revsent/io.hpp"

namespace revsent {

namespace {

std::string fixed(double value, int precision) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, precision);
  return std::string(buf, result.ptr);
}

std::string mean_std(const Aggregate& a) { return fixed(a.mean, 3) + "±" + fixed(a.std, 3); }

const char* const kCsvHeader[] = {"pipeline",    "label",      "dataset",        "folds",        "accuracy_mean",
                                  "accuracy_std", "f1_mean",   "f1_std",         "recall_mean",  "recall_std",
                                  "vectorization_s", "training_s", "prediction_s"};
constexpr std::size_t kCsvColumns = std::size(kCsvHeader);
constexpr std::size_t kCsvMetricColumns = kCsvColumns - 3;

std::string emit_csv(const std::vector<SummaryRow>& rows, bool include_timing) {
  const std::size_t columns = include_timing ? kCsvColumns : kCsvMetricColumns;
  std::string out;
  for (std::size_t i = 0; i < columns; ++i) {
    if (i) out += ',';
    out += kCsvHeader[i];
  }
  out += '\n';
  for (const auto& r : rows) {
    const std::string fields[] = {csv_escape(r.pipeline),
                                  csv_escape(r.label),
                                  csv_escape(r.dataset),
                                  std::to_string(r.folds),
                                  format_double(r.accuracy.mean),
                                  format_double(r.accuracy.std),
                                  format_double(r.f1.mean),
                                  format_double(r.f1.std),
                                  format_double(r.recall.mean),
                                  format_double(r.recall.std),
                                  format_double(r.vectorization_s),
                                  format_double(r.training_s),
                                  format_double(r.prediction_s)};
    for (std::size_t i = 0; i < columns; ++i) {
      if (i) out += ',';
      out += fields[i];
    }
    out += '\n';
  }
  return out;
}

std::string md_cell(std::string_view text) {
  std::string out;
  for (const char c : text) {
    if (c == '|') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

std::string emit_markdown(const std::vector<SummaryRow>& rows, bool include_timing) {
  std::string out;
  const std::string metric_header = "| Model | Accuracy | F1 Score | Recall |\n|---|---|---|---|\n";
  if (rows.empty()) {
    out += "## Performance\n\n" + metric_header;
  } else {
    out += "## Performance\n";
    std::vector<std::string> datasets;
    for (const auto& r : rows) {
      if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) datasets.push_back(r.dataset);
    }
    for (const auto& dataset : datasets) {
      out += "\n### " + md_cell(dataset) + "\n\n" + metric_header;
      for (const auto& r : rows) {
        if (r.dataset != dataset) continue;
        out += "| " + md_cell(r.label) + " | " + mean_std(r.accuracy) + " | " + mean_std(r.f1) + " | " +
               mean_std(r.recall) + " |\n";
      }
    }
  }
  if (!include_timing) return out;
  out +=
      "\n## Timing\n\n| Model | Data Set | Average Vectorization Time | Average Training Time | Average Prediction "
      "Time |\n|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    out += "| " + md_cell(r.label) + " | " + md_cell(r.dataset) + " | " + fixed(r.vectorization_s, 4) + " | " +
           fixed(r.training_s, 4) + " | " + fixed(r.prediction_s, 4) + " |\n";
  }
  return out;
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "markdown" || name == "md") return ReportFormat::kMarkdown;
  throw std::invalid_argument("unknown report format: " + std::string(name));
}

std::string emit_summary(const std::vector<SummaryRow>& rows, ReportFormat format, bool include_timing) {
  return format == ReportFormat::kCsv ? emit_csv(rows, include_timing) : emit_markdown(rows, include_timing);
}

std::string emit_report(const EvalReport& report, ReportFormat format, bool include_timing) {
  return emit_summary(summarize(report), format, include_timing);
}

std::vector<SummaryRow> parse_report_csv(std::string_view csv) {
  const CsvTable table = parse_csv(csv);
  const std::size_t columns = table.header.size();
  if (columns != kCsvColumns && columns != kCsvMetricColumns) throw IoError("report csv: unexpected header");
  for (std::size_t i = 0; i < columns; ++i) {
    if (table.header[i] != kCsvHeader[i]) throw IoError("report csv: unexpected column " + table.header[i]);
  }
  auto number = [](const std::string& field) {
    const auto value = parse_double(field);
    if (!value) throw IoError("report csv: not a number: " + field);
    return *value;
  };
  std::vector<SummaryRow> rows;
  for (const auto& f : table.rows) {
    if (f.size() != columns) throw IoError("report csv: wrong field count");
    SummaryRow r;
    r.pipeline = f[0];
    r.label = f[1];
    r.dataset = f[2];
    r.folds = static_cast<std::size_t>(number(f[3]));
    r.accuracy = {number(f[4]), number(f[5])};
    r.f1 = {number(f[6]), number(f[7])};
    r.recall = {number(f[8]), number(f[9])};
    if (columns == kCsvColumns) {
      r.vectorization_s = number(f[10]);
      r.training_s = number(f[11]);
      r.prediction_s = number(f[12]);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace revsent
