#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "revsent/eval.hpp"

namespace revsent {

enum class ReportFormat { kCsv, kMarkdown };

ReportFormat parse_report_format(std::string_view name);

// Markdown: one "Model | Accuracy | F1 Score | Recall" table per dataset
// (mean±std), then a timing table with average vectorization / training /
// prediction seconds. CSV: one row per (pipeline, dataset) with exact values.
// Output depends only on the report contents. Without timing, the timing
// table (markdown) or timing columns (CSV) are left out, which makes the
// document reproducible across runs.
std::string emit_report(const EvalReport& report, ReportFormat format, bool include_timing = true);
std::string emit_summary(const std::vector<SummaryRow>& rows, ReportFormat format, bool include_timing = true);

// Accepts CSV with or without timing columns; absent timings read as 0.
std::vector<SummaryRow> parse_report_csv(std::string_view csv);

}  // namespace revsent
