#pragma once

// Census income benchmark on five attributes: age, education-num,
// occupation, sex and hours-per-week.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "apsosvm/report.hpp"
#include "apsosvm/svm.hpp"
#include "apsosvm/tuner.hpp"

namespace apsosvm {

struct AdultRecord {
  int age = 0;
  int education_level = 0;
  std::string occupation;
  std::string gender;
  int hours_per_week = 0;
  int label = -1;  // +1 for ">50K"

  bool operator==(const AdultRecord&) const = default;
};

enum class AdultSplit { train, test };

struct IngestIssue {
  std::size_t line = 0;
  std::string reason;
};

struct IngestResult {
  std::vector<AdultRecord> records;
  std::size_t dropped_missing = 0;
  std::vector<IngestIssue> malformed;

  std::size_t kept() const { return records.size(); }
};

/// Parses one data row. Returns nullopt when a selected attribute is "?".
/// Throws DataError on malformed rows.
std::optional<AdultRecord> parse_adult_line(std::string_view line, AdultSplit split);

IngestResult ingest(std::istream& in, AdultSplit split);
IngestResult ingest(const std::string& path, AdultSplit split);

/// Scaling and category tables, fitted on one record set.
struct EncodingStats {
  double age_min = 0, age_max = 0;
  double education_min = 0, education_max = 0;
  double hours_min = 0, hours_max = 0;
  std::vector<std::string> occupations;  // sorted
  std::vector<std::string> genders;      // sorted
  /// Fingerprint and size of the records the stats were fitted on.
  std::uint64_t fitted_on = 0;
  std::size_t fitted_rows = 0;

  std::size_t dimension() const { return 3 + occupations.size() + genders.size(); }
};

std::uint64_t fingerprint(const std::vector<AdultRecord>& records);
EncodingStats fit_encoding(const std::vector<AdultRecord>& records);

struct EncodedDataset {
  Dataset data;
  EncodingStats stats;
  /// Rows whose occupation or gender was missing from the stats.
  std::size_t unseen_categories = 0;
};

/// Without `stats` the encoding is fitted on `records` themselves. Numeric
/// values outside the fitted range are clamped into [0, 1].
EncodedDataset encode(const std::vector<AdultRecord>& records,
                      const std::optional<EncodingStats>& stats = std::nullopt);

/// Stratified draw of `size` rows out of `pool`, avoiding `exclude`.
/// Class counts follow the pool's base rate among the available rows.
std::vector<std::size_t> stratified_sample(const std::vector<AdultRecord>& pool, std::size_t size,
                                           std::uint64_t seed,
                                           const std::vector<std::size_t>& exclude = {});

struct AdultData {
  std::vector<AdultRecord> train;
  /// Empty means test rows are drawn from `train`, disjoint from the training draw.
  std::vector<AdultRecord> test;
};

/// Loads adult.data and adult.test from `dir` when both exist, otherwise the
/// shipped fixture `adult_fixture.data` as a single pool.
AdultData load_adult_dir(const std::string& dir);

/// The data directory from APSOSVM_ADULT_DIR, or `fallback`.
std::string adult_dir_from_env(const std::string& fallback);

struct AdultBenchmark {
  std::size_t train_size = 512;
  std::size_t test_size = 256;
  double C = 1.25;
  /// Gamma for the fixed-C run; 0 selects 1/d unless cv_gamma_rows is set.
  double gamma = 0.0;
  /// When positive, gamma is picked from 2^-5 .. 2^3 by 5-fold CV at C on a
  /// stratified slice of this many training rows.
  std::size_t cv_gamma_rows = 0;
  std::optional<TunerConfig> tuner;
  std::uint64_t seed = 0;
  TrainOptions train;
};

struct AdultResult {
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  double error_percent = 0.0;
  double C = 0.0;
  double gamma = 0.0;
  std::size_t n_support = 0;
  std::size_t unseen_categories = 0;
  std::uint64_t seed = 0;
  double elapsed_ms = 0.0;
};

AdultResult run_benchmark(const AdultData& data, const AdultBenchmark& cfg,
                          ExecPolicy policy = ExecPolicy::serial);

/// Grid of log2 gamma from -5 to 3; returns the gamma with the lowest CV
/// error (ties to the smaller gamma).
double select_gamma_cv(const Dataset& data, double C, std::size_t folds, std::uint64_t seed,
                       const TrainOptions& train = {});

Record to_record(const AdultResult& result);

}  // namespace apsosvm
