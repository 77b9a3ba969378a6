#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace apsosvm {

/// Outcome of one optimizer or benchmark run.
struct RunReport {
  std::vector<double> best_position;
  double best_fitness = 0.0;
  std::size_t evaluations = 0;
  double elapsed_ms = 0.0;
  std::uint64_t seed = 0;
  std::optional<double> deviation;
  std::size_t rejected_moves = 0;
};

/// Ordered flat key/value record, printed as `k=v k=v ...` on one line.
using Record = std::vector<std::pair<std::string, std::string>>;

std::string format_real(double value);
std::string format_reals(std::span<const double> values);

/// Deterministic fields first; `elapsed_ms` is always last so it can be stripped.
Record to_record(const RunReport& report);

void write_record(std::ostream& out, const Record& record);

/// Fixed-width table with a header row taken from the first record's keys.
void write_table(std::ostream& out, const std::vector<Record>& rows);

}  // namespace apsosvm
