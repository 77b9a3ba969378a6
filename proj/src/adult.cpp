#include "apsosvm/adult.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "apsosvm/errors.hpp"

namespace apsosvm {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

int parse_int(std::string_view field, const char* name) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw DataError(std::string("bad ") + name + " '" + std::string(field) + "'");
  return value;
}

// Column positions in the 15-field layout.
constexpr std::size_t kAge = 0, kEducationNum = 4, kOccupation = 6, kSex = 9, kHours = 12,
                      kIncome = 14, kFields = 15;

double scale(double v, double lo, double hi) {
  if (hi <= lo) return 0.0;
  return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
}

void mix(std::uint64_t& h, std::string_view s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h ^= 0xff;
  h *= 0x100000001b3ULL;
}

}  // namespace

std::optional<AdultRecord> parse_adult_line(std::string_view line, AdultSplit split) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (fields.size() != kFields)
    throw DataError("expected 15 fields, found " + std::to_string(fields.size()));

  for (auto idx : {kAge, kEducationNum, kOccupation, kSex, kHours}) {
    if (fields[idx] == "?") return std::nullopt;
  }

  AdultRecord r;
  r.age = parse_int(fields[kAge], "age");
  r.education_level = parse_int(fields[kEducationNum], "education-num");
  r.occupation = std::string(fields[kOccupation]);
  r.gender = std::string(fields[kSex]);
  r.hours_per_week = parse_int(fields[kHours], "hours-per-week");

  auto income = fields[kIncome];
  if (split == AdultSplit::test && !income.empty() && income.back() == '.') income.remove_suffix(1);
  if (income == "<=50K") {
    r.label = -1;
  } else if (income == ">50K") {
    r.label = 1;
  } else {
    throw DataError("bad income label '" + std::string(fields[kIncome]) + "'");
  }
  if (r.age < 17 || r.age > 100) throw DataError("age out of range");
  if (r.hours_per_week < 1 || r.hours_per_week > 99) throw DataError("hours out of range");
  if (r.occupation.empty() || r.gender.empty()) throw DataError("empty category");
  return r;
}

IngestResult ingest(std::istream& in, AdultSplit split) {
  IngestResult out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '|') continue;  // blank lines and the test-file header
    try {
      if (auto rec = parse_adult_line(t, split)) {
        out.records.push_back(std::move(*rec));
      } else {
        ++out.dropped_missing;
      }
    } catch (const DataError& e) {
      out.malformed.push_back({lineno, e.what()});
    }
  }
  return out;
}

IngestResult ingest(const std::string& path, AdultSplit split) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return ingest(in, split);
}

std::uint64_t fingerprint(const std::vector<AdultRecord>& records) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& r : records) {
    mix(h, std::to_string(r.age));
    mix(h, std::to_string(r.education_level));
    mix(h, r.occupation);
    mix(h, r.gender);
    mix(h, std::to_string(r.hours_per_week));
    mix(h, std::to_string(r.label));
  }
  return h;
}

EncodingStats fit_encoding(const std::vector<AdultRecord>& records) {
  if (records.empty()) throw DataError("cannot fit an encoding on no records");
  EncodingStats s;
  const auto& first = records.front();
  s.age_min = s.age_max = first.age;
  s.education_min = s.education_max = first.education_level;
  s.hours_min = s.hours_max = first.hours_per_week;
  for (const auto& r : records) {
    s.age_min = std::min<double>(s.age_min, r.age);
    s.age_max = std::max<double>(s.age_max, r.age);
    s.education_min = std::min<double>(s.education_min, r.education_level);
    s.education_max = std::max<double>(s.education_max, r.education_level);
    s.hours_min = std::min<double>(s.hours_min, r.hours_per_week);
    s.hours_max = std::max<double>(s.hours_max, r.hours_per_week);
    s.occupations.push_back(r.occupation);
    s.genders.push_back(r.gender);
  }
  for (auto* v : {&s.occupations, &s.genders}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  s.fitted_on = fingerprint(records);
  s.fitted_rows = records.size();
  return s;
}

EncodedDataset encode(const std::vector<AdultRecord>& records,
                      const std::optional<EncodingStats>& stats) {
  if (records.empty()) throw DataError("cannot encode an empty record set");
  EncodedDataset out;
  out.stats = stats ? *stats : fit_encoding(records);
  const auto& s = out.stats;
  const std::size_t d = s.dimension();
  out.data.dim = d;
  out.data.points.reserve(records.size() * d);
  out.data.labels.reserve(records.size());

  const auto slot = [](const std::vector<std::string>& cats, const std::string& v) {
    const auto it = std::lower_bound(cats.begin(), cats.end(), v);
    return it != cats.end() && *it == v ? std::optional<std::size_t>(it - cats.begin())
                                        : std::nullopt;
  };

  std::vector<double> x(d);
  for (const auto& r : records) {
    std::fill(x.begin(), x.end(), 0.0);
    x[0] = scale(r.age, s.age_min, s.age_max);
    x[1] = scale(r.education_level, s.education_min, s.education_max);
    x[2] = scale(r.hours_per_week, s.hours_min, s.hours_max);
    const auto occ = slot(s.occupations, r.occupation);
    const auto sex = slot(s.genders, r.gender);
    if (occ) x[3 + *occ] = 1.0;
    if (sex) x[3 + s.occupations.size() + *sex] = 1.0;
    if (!occ || !sex) ++out.unseen_categories;
    out.data.add(x, r.label);
  }
  return out;
}

std::vector<std::size_t> stratified_sample(const std::vector<AdultRecord>& pool, std::size_t size,
                                           std::uint64_t seed,
                                           const std::vector<std::size_t>& exclude) {
  std::vector<char> taken(pool.size(), 0);
  for (auto i : exclude) {
    if (i < pool.size()) taken[i] = 1;
  }
  std::vector<std::size_t> pos, neg;
  std::size_t pool_pos = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    pool_pos += pool[i].label > 0;
    if (!taken[i]) (pool[i].label > 0 ? pos : neg).push_back(i);
  }
  if (size > pos.size() + neg.size())
    throw DataError("requested " + std::to_string(size) + " rows but only " +
                    std::to_string(pos.size() + neg.size()) + " are available");

  const double rate = pool.empty() ? 0.0 : static_cast<double>(pool_pos) / pool.size();
  auto n_pos = static_cast<std::size_t>(std::llround(rate * static_cast<double>(size)));
  n_pos = std::min(n_pos, pos.size());
  if (size - n_pos > neg.size()) n_pos = size - neg.size();

  std::mt19937_64 gen(seed);
  std::shuffle(pos.begin(), pos.end(), gen);
  std::shuffle(neg.begin(), neg.end(), gen);
  std::vector<std::size_t> out(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(n_pos));
  out.insert(out.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(size - n_pos));
  std::sort(out.begin(), out.end());
  return out;
}

AdultData load_adult_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  const auto require_clean = [](const IngestResult& r, const fs::path& p) {
    if (r.records.empty()) throw DataError("no usable rows in " + p.string());
    return r.records;
  };
  AdultData out;
  if (fs::exists(root / "adult.data") && fs::exists(root / "adult.test")) {
    out.train = require_clean(ingest((root / "adult.data").string(), AdultSplit::train),
                              root / "adult.data");
    out.test = require_clean(ingest((root / "adult.test").string(), AdultSplit::test),
                             root / "adult.test");
    return out;
  }
  const auto fixture = root / "adult_fixture.data";
  if (!fs::exists(fixture)) throw DataError("no adult data under " + dir);
  out.train = require_clean(ingest(fixture.string(), AdultSplit::train), fixture);
  return out;
}

std::string adult_dir_from_env(const std::string& fallback) {
  const char* env = std::getenv("APSOSVM_ADULT_DIR");
  return env && *env ? std::string(env) : fallback;
}

double select_gamma_cv(const Dataset& data, double C, std::size_t folds, std::uint64_t seed,
                       const TrainOptions& train) {
  double best_gamma = 0.0, best_err = 2.0;
  for (int e = -5; e <= 3; ++e) {
    const double gamma = std::ldexp(1.0, e);
    const double err = cv_error(data, KernelSpec::rbf(gamma), C, folds, seed, train);
    if (err < best_err) {
      best_err = err;
      best_gamma = gamma;
    }
  }
  return best_gamma;
}

AdultResult run_benchmark(const AdultData& data, const AdultBenchmark& cfg, ExecPolicy policy) {
  if (cfg.train_size < 2 || cfg.test_size < 1) throw ConfigError("train and test sizes must be positive");
  if (!(cfg.C > 0.0)) throw ConfigError("C must be positive");
  if (cfg.gamma < 0.0) throw ConfigError("gamma must be non-negative");
  const auto start = std::chrono::steady_clock::now();

  const auto train_idx = stratified_sample(data.train, cfg.train_size, cfg.seed);
  std::vector<AdultRecord> train_rows, test_rows;
  for (auto i : train_idx) train_rows.push_back(data.train[i]);
  // A distinct stream for the test draw so it does not mirror the training shuffle.
  const std::uint64_t test_seed = cfg.seed ^ 0x5851f42d4c957f2dULL;
  if (data.test.empty()) {
    for (auto i : stratified_sample(data.train, cfg.test_size, test_seed, train_idx))
      test_rows.push_back(data.train[i]);
  } else {
    for (auto i : stratified_sample(data.test, cfg.test_size, test_seed))
      test_rows.push_back(data.test[i]);
  }

  const auto train_set = encode(train_rows);
  const auto test_set = encode(test_rows, train_set.stats);

  AdultResult result;
  result.train_size = cfg.train_size;
  result.test_size = cfg.test_size;
  result.seed = cfg.seed;
  result.unseen_categories = test_set.unseen_categories;

  SvmModel model;
  if (cfg.tuner) {
    const auto tuned = tune(train_set.data, *cfg.tuner, policy);
    model = tuned.model;
    result.C = tuned.best_C;
    result.gamma = tuned.best_gamma;
  } else {
    result.C = cfg.C;
    TrainOptions opts = cfg.train;
    opts.policy = policy;
    if (cfg.gamma > 0.0) {
      result.gamma = cfg.gamma;
    } else if (cfg.cv_gamma_rows > 0) {
      std::vector<AdultRecord> slice;
      for (auto i : stratified_sample(train_rows, std::min(cfg.cv_gamma_rows, train_rows.size()), cfg.seed))
        slice.push_back(train_rows[i]);
      result.gamma = select_gamma_cv(encode(slice, train_set.stats).data, cfg.C, 5, cfg.seed, opts);
    } else {
      result.gamma = 1.0 / static_cast<double>(train_set.data.dim);
    }
    model = train_detailed(train_set.data, KernelSpec::rbf(result.gamma), result.C, opts).model;
  }
  result.n_support = model.n_support();
  result.error_percent = 100.0 * error_rate(model, test_set.data);
  result.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

Record to_record(const AdultResult& r) {
  return {{"train_size", std::to_string(r.train_size)},
          {"test_size", std::to_string(r.test_size)},
          {"error_percent", format_real(r.error_percent)},
          {"C", format_real(r.C)},
          {"gamma", format_real(r.gamma)},
          {"n_support", std::to_string(r.n_support)},
          {"unseen_categories", std::to_string(r.unseen_categories)},
          {"seed", std::to_string(r.seed)},
          {"elapsed_ms", format_real(r.elapsed_ms)}};
}

}  // namespace apsosvm
