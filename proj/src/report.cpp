#include "apsosvm/report.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>

namespace apsosvm {

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string format_reals(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_real(values[i]);
  }
  return out;
}

Record to_record(const RunReport& report) {
  Record r;
  r.emplace_back("best_fitness", format_real(report.best_fitness));
  r.emplace_back("best_position", format_reals(report.best_position));
  r.emplace_back("evaluations", std::to_string(report.evaluations));
  r.emplace_back("seed", std::to_string(report.seed));
  if (report.deviation) r.emplace_back("deviation", format_real(*report.deviation));
  r.emplace_back("rejected_moves", std::to_string(report.rejected_moves));
  r.emplace_back("elapsed_ms", format_real(report.elapsed_ms));
  return r;
}

void write_record(std::ostream& out, const Record& record) {
  for (std::size_t i = 0; i < record.size(); ++i) {
    if (i) out << ' ';
    out << record[i].first << '=' << record[i].second;
  }
  out << '\n';
}

void write_table(std::ostream& out, const std::vector<Record>& rows) {
  if (rows.empty()) return;
  const auto& header = rows.front();
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].first.size();
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < std::min(row.size(), width.size()); ++c) {
      width[c] = std::max(width[c], row[c].second.size());
    }
  }
  for (std::size_t c = 0; c < header.size(); ++c) {
    out << std::left << std::setw(static_cast<int>(width[c]) + 2) << header[c].first;
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < std::min(row.size(), width.size()); ++c) {
      out << std::left << std::setw(static_cast<int>(width[c]) + 2) << row[c].second;
    }
    out << '\n';
  }
}

}  // namespace apsosvm
