#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "termforge/error.hpp"
#include "termforge/eval.hpp"
#include "termforge/io.hpp"

namespace termforge {

namespace {

struct Metric {
  std::string_view label;
  double MetricScore::*field;
};

constexpr Metric kMetrics[] = {
    {"BLEU", &MetricScore::bleu},
    {"METEOR", &MetricScore::meteor},
    {"chrF3", &MetricScore::chrf3},
};

template <typename Get>
std::vector<std::string> first_seen(const std::vector<ReportRow>& rows, Get get) {
  std::vector<std::string> out;
  for (const auto& r : rows) {
    const std::string& v = get(r);
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

}  // namespace

std::string format_report(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw ValidationError("report needs at least one result");
  auto systems = first_seen(rows, [](const ReportRow& r) -> const std::string& { return r.system; });
  auto sets = first_seen(rows, [](const ReportRow& r) -> const std::string& { return r.evalset; });
  std::map<std::pair<std::string, std::string>, MetricScore> cells;
  for (const auto& r : rows) cells[{r.system, r.evalset}] = r.score;

  std::size_t label_width = 6;
  for (const auto& s : systems) label_width = std::max(label_width, s.size());
  std::size_t col_width = 8;
  for (const auto& s : sets) col_width = std::max(col_width, s.size());

  std::string out;
  for (const auto& metric : kMetrics) {
    if (!out.empty()) out += '\n';
    out += fmt::format("{:<{}}", metric.label, label_width);
    for (const auto& s : sets) out += fmt::format("  {:>{}}", s, col_width);
    out += '\n';
    for (const auto& sys : systems) {
      out += fmt::format("{:<{}}", sys, label_width);
      for (const auto& s : sets) {
        auto it = cells.find({sys, s});
        if (it == cells.end()) {
          out += fmt::format("  {:>{}}", "-", col_width);
        } else {
          out += fmt::format("  {:>{}.2f}", it->second.*(metric.field), col_width);
        }
      }
      out += '\n';
    }
  }
  return out;
}

std::string format_report_tsv(const std::vector<ReportRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    for (const auto& metric : kMetrics) {
      out += fmt::format("{}\t{}\t{}\t{}\n", r.system, r.evalset, metric.label, io::format_double(r.score.*(metric.field)));
    }
  }
  return out;
}

std::vector<ReportRow> parse_report_tsv(std::string_view text) {
  std::vector<ReportRow> rows;
  std::size_t line_no = 0;
  for (const auto& line : io::split(text, '\n')) {
    ++line_no;
    if (io::trim(line).empty()) continue;
    auto f = io::split(line, '\t');
    if (f.size() != 4) throw ParseError("expected 4 tab-separated fields", line_no);
    auto it = std::find_if(rows.begin(), rows.end(),
                           [&](const ReportRow& r) { return r.system == f[0] && r.evalset == f[1]; });
    if (it == rows.end()) {
      rows.push_back({f[0], f[1], {}});
      it = rows.end() - 1;
    }
    auto metric = std::find_if(std::begin(kMetrics), std::end(kMetrics),
                               [&](const Metric& m) { return m.label == f[2]; });
    if (metric == std::end(kMetrics)) throw ParseError("unknown metric '" + f[2] + "'", line_no);
    (*it).score.*(metric->field) = io::parse_double(f[3]);
  }
  return rows;
}

}  // namespace termforge
