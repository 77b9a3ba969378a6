// Command-line front end: one subcommand per optimizer, SVM utility or benchmark.
//
// Exit codes: 0 success, 1 internal error, 2 usage, 3 invalid config,
// 4 bad data, 5 convergence failure, 6 missing file. Every failure prints a
// single `error category=<name> message=<text>` line on stderr.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "apsosvm/adult.hpp"
#include "apsosvm/apso.hpp"
#include "apsosvm/cobb_douglas.hpp"
#include "apsosvm/errors.hpp"
#include "apsosvm/kvconfig.hpp"
#include "apsosvm/objectives.hpp"
#include "apsosvm/rcpsp.hpp"
#include "apsosvm/report.hpp"
#include "apsosvm/svm.hpp"
#include "apsosvm/tuner.hpp"

#ifndef APSOSVM_DEFAULT_DATA_DIR
#define APSOSVM_DEFAULT_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace apsosvm;

namespace {

enum ExitCode {
  exit_ok = 0,
  exit_internal = 1,
  exit_usage = 2,
  exit_config = 3,
  exit_data = 4,
  exit_convergence = 5,
  exit_missing_file = 6,
};

class MissingFile : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const std::set<std::string> kSwarmKeys = {"variant", "n_particles", "max_iterations", "alpha0",
                                          "beta",    "gamma",       "theta",          "schedule",
                                          "seed"};

std::set<std::string> with_swarm_keys(std::set<std::string> keys) {
  keys.insert(kSwarmKeys.begin(), kSwarmKeys.end());
  return keys;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = item.find_last_not_of(" \t");
    out.push_back(item.substr(first, last - first + 1));
  }
  return out;
}

double parse_real(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key `" + key + "`: not a number: " + text);
}

std::size_t parse_count(const std::string& key, const std::string& text) {
  const double v = parse_real(key, text);
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e12) {
    throw ConfigError("config key `" + key + "`: expected a positive integer, got " + text);
  }
  return static_cast<std::size_t>(v);
}

std::vector<double> real_list(const KeyValueConfig& kv, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : split_list(kv.get_string(key, ""))) out.push_back(parse_real(key, item));
  return out;
}

std::vector<std::size_t> count_list(const KeyValueConfig& kv, const std::string& key,
                                    const std::string& fallback) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(kv.get_string(key, fallback))) out.push_back(parse_count(key, item));
  if (out.empty()) throw ConfigError("config key `" + key + "` is empty");
  return out;
}

std::string join(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
  return out;
}

ExecPolicy parse_policy(const std::string& name) {
  if (name == "serial") return ExecPolicy::serial;
  if (name == "parallel") return ExecPolicy::parallel;
  throw ConfigError("policy must be serial or parallel, got " + name);
}

std::string to_string(ExecPolicy p) { return p == ExecPolicy::parallel ? "parallel" : "serial"; }

std::size_t positive_int(const KeyValueConfig& kv, const std::string& key, long long fallback) {
  const long long v = kv.get_int(key, fallback);
  if (v <= 0) throw ConfigError(key + " must be positive");
  return static_cast<std::size_t>(v);
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

void add_elapsed(Record& r, double ms) { r.emplace_back("elapsed_ms", format_real(ms)); }

/// Inserts deterministic fields ahead of a record, keeping elapsed_ms last.
void prepend(Record& r, Record head) { r.insert(r.begin(), head.begin(), head.end()); }

struct Invocation {
  std::string subcommand;
  std::string config_path;
  std::optional<std::uint64_t> seed_flag;
  std::string out_path;
  std::string format = "records";
  std::string data_dir_flag;

  KeyValueConfig kv;
  fs::path base_dir;
  std::uint64_t seed = 0;
  /// Effective parameters, echoed in the banner.
  KeyValueConfig resolved;
  std::vector<std::vector<Record>> tables;

  void load() {
    if (!config_path.empty()) {
      if (!fs::is_regular_file(config_path)) throw MissingFile("config file not found: " + config_path);
      kv = KeyValueConfig::load(config_path);
      base_dir = fs::path(config_path).parent_path();
    }
    seed = seed_flag ? *seed_flag : kv.get_u64("seed", 0);
    kv.set("seed", std::to_string(seed));
  }

  /// Value of a path key, relative to the config file's directory.
  std::optional<std::string> path(const std::string& key) const {
    const auto v = kv.get(key);
    if (!v || v->empty()) return std::nullopt;
    const fs::path p(*v);
    return (p.is_relative() && !base_dir.empty() ? base_dir / p : p).lexically_normal().string();
  }

  std::string existing_file(const std::string& key) const {
    const auto p = path(key);
    if (!p) throw ConfigError("config key `" + key + "` is required");
    if (!fs::is_regular_file(*p)) throw MissingFile(key + " not found: " + *p);
    return *p;
  }

  void note(const std::string& key, const std::string& value) { resolved.set(key, value); }

  void note_swarm(const SwarmConfig& cfg) {
    const auto kv = cfg.to_config();
    for (const auto& [k, v] : kv.entries()) note(k, v);
  }

  void banner() const {
    std::cerr << "# apsosvm " << subcommand << " seed=" << seed
              << " config=" << (config_path.empty() ? "none" : config_path);
    for (const auto& [k, v] : resolved.entries()) {
      if (k != "seed") std::cerr << ' ' << k << '=' << v;
    }
    std::cerr << '\n';
  }

  void emit() const {
    std::ofstream file;
    if (!out_path.empty()) {
      file.open(out_path);
      if (!file) throw DataError("cannot write output file: " + out_path);
    }
    std::ostream& out = out_path.empty() ? std::cout : file;
    for (std::size_t t = 0; t < tables.size(); ++t) {
      if (format == "table") {
        if (t) out << '\n';
        write_table(out, tables[t]);
      } else {
        for (const auto& r : tables[t]) write_record(out, r);
      }
    }
  }
};

void run_optimize(Invocation& inv) {
  auto& kv = inv.kv;
  kv.require_known(with_swarm_keys(
      {"objective", "dimension", "lower", "upper", "evaluation_limit", "policy", "log_every"}));
  const auto objective = kv.get_string("objective", "sphere");
  const auto dimension = positive_int(kv, "dimension", 10);
  const double lower = kv.get_double("lower", -5.0), upper = kv.get_double("upper", 5.0);
  const auto spec = make_objective(objective, dimension, lower, upper);
  const auto swarm = SwarmConfig::from_config(kv);
  RunOptions options;
  options.policy = parse_policy(kv.get_string("policy", "serial"));
  const long long limit = kv.get_int("evaluation_limit", 0);
  if (limit < 0) throw ConfigError("evaluation_limit must be >= 0");
  options.evaluation_limit = static_cast<std::size_t>(limit);
  const long long log_every = kv.get_int("log_every", 0);
  if (log_every < 0) throw ConfigError("log_every must be >= 0");

  inv.note("objective", objective);
  inv.note("dimension", std::to_string(dimension));
  inv.note("lower", format_real(lower));
  inv.note("upper", format_real(upper));
  inv.note("evaluation_limit", std::to_string(limit));
  inv.note("policy", to_string(options.policy));
  inv.note_swarm(swarm);
  inv.banner();

  if (log_every > 0) {
    // Progress goes to stderr, one line per `log_every` iterations.
    auto best = std::make_shared<double>(std::numeric_limits<double>::infinity());
    auto last = std::make_shared<std::size_t>(0);
    options.observer = [best, last, log_every](const EvaluationRecord& e) {
      if (e.iteration != *last && e.iteration % static_cast<std::size_t>(log_every) == 0) {
        std::cerr << "# iteration=" << *last << " best_fitness=" << format_real(*best) << '\n';
      }
      *last = e.iteration;
      if (e.fitness < *best) *best = e.fitness;
    };
  }
  const auto report = optimize(spec, swarm, options);
  auto rec = to_record(report);
  prepend(rec, {{"objective", objective}, {"dimension", std::to_string(dimension)}});
  inv.tables.push_back({rec});
}

KernelSpec kernel_from(const KeyValueConfig& kv) {
  KernelSpec k;
  k.kind = parse_kernel_kind(kv.get_string("kernel", "rbf"));
  k.gamma = kv.get_double("gamma", k.gamma);
  k.degree = static_cast<int>(kv.get_int("degree", k.degree));
  k.k_scale = kv.get_double("k_scale", k.k_scale);
  k.theta_offset = kv.get_double("theta_offset", k.theta_offset);
  k.validate();
  return k;
}

TrainOptions train_options_from(const KeyValueConfig& kv, ExecPolicy policy) {
  TrainOptions t;
  t.tol = kv.get_double("tol", t.tol);
  t.max_passes = positive_int(kv, "max_passes", static_cast<long long>(t.max_passes));
  if (!(t.tol > 0.0)) throw ConfigError("tol must be positive");
  t.policy = policy;
  return t;
}

void run_svm_train(Invocation& inv) {
  auto& kv = inv.kv;
  kv.require_known({"data", "kernel", "gamma", "degree", "k_scale", "theta_offset", "C", "tol",
                    "max_passes", "model", "policy", "seed"});
  const auto data_path = inv.existing_file("data");
  const auto kernel = kernel_from(kv);
  const double C = kv.get_double("C", 1.0);
  if (!(C > 0.0)) throw ConfigError("C must be positive");
  const auto train = train_options_from(kv, parse_policy(kv.get_string("policy", "serial")));
  const auto model_path = inv.path("model");

  inv.note("data", data_path);
  inv.note("kernel", to_string(kernel.kind));
  inv.note("gamma", format_real(kernel.gamma));
  inv.note("degree", std::to_string(kernel.degree));
  inv.note("k_scale", format_real(kernel.k_scale));
  inv.note("theta_offset", format_real(kernel.theta_offset));
  inv.note("C", format_real(C));
  inv.note("tol", format_real(train.tol));
  inv.note("max_passes", std::to_string(train.max_passes));
  inv.note("model", model_path.value_or("none"));
  inv.banner();

  const auto t0 = std::chrono::steady_clock::now();
  const auto data = load_dataset(data_path);
  const auto result = train_detailed(data, kernel, C, train);
  if (model_path) save_model(*model_path, result.model);
  Record rec{{"rows", std::to_string(data.size())},
             {"dim", std::to_string(data.dim)},
             {"n_support", std::to_string(result.model.n_support())},
             {"bias", format_real(result.model.bias)},
             {"dual_objective", format_real(result.dual_objective)},
             {"iterations", std::to_string(result.iterations)},
             {"train_error", format_real(error_rate(result.model, data))},
             {"seed", std::to_string(inv.seed)}};
  add_elapsed(rec, elapsed_since(t0));
  inv.tables.push_back({rec});
}

/// Rows with dim + 1 values carry a leading label; rows with dim values do not.
struct QueryRows {
  std::vector<std::vector<double>> x;
  std::vector<int> labels;  // empty when unlabeled
};

QueryRows load_queries(const std::string& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open data: " + path);
  QueryRows q;
  std::optional<bool> labeled;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<double> row;
    std::string tok;
    const auto where = "line " + std::to_string(lineno) + ": ";
    while (fields >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || !std::isfinite(v)) throw DataError(where + "bad value '" + tok + "'");
      row.push_back(v);
    }
    if (row.empty()) continue;
    bool has_label = false;
    if (row.size() == dim + 1) {
      has_label = true;
    } else if (row.size() != dim) {
      throw DataError(where + "expected " + std::to_string(dim) + " features (plus optional label), got " +
                      std::to_string(row.size()) + " values");
    }
    if (labeled && *labeled != has_label) throw DataError(where + "mixes labeled and unlabeled rows");
    labeled = has_label;
    if (has_label) {
      if (row[0] != 1.0 && row[0] != -1.0) throw DataError(where + "label must be -1 or +1");
      q.labels.push_back(static_cast<int>(row[0]));
      row.erase(row.begin());
    }
    q.x.push_back(std::move(row));
  }
  if (q.x.empty()) throw DataError("no rows in " + path);
  return q;
}

void run_svm_predict(Invocation& inv) {
  auto& kv = inv.kv;
  kv.require_known({"model", "data", "seed"});
  const auto model_path = inv.existing_file("model");
  const auto data_path = inv.existing_file("data");
  inv.note("model", model_path);
  inv.note("data", data_path);
  inv.banner();

  const auto t0 = std::chrono::steady_clock::now();
  const auto model = load_model(model_path);
  const auto q = load_queries(data_path, model.dim);
  std::vector<Record> rows;
  std::size_t errors = 0;
  for (std::size_t i = 0; i < q.x.size(); ++i) {
    const double f = decision_value(model, q.x[i]);
    const int y = predict(model, q.x[i]);
    Record r{{"row", std::to_string(i)}, {"prediction", y > 0 ? "+1" : "-1"}, {"decision", format_real(f)}};
    if (!q.labels.empty()) {
      r.emplace_back("label", q.labels[i] > 0 ? "+1" : "-1");
      errors += y != q.labels[i];
    }
    rows.push_back(std::move(r));
  }
  inv.tables.push_back(std::move(rows));
  if (!q.labels.empty()) {
    Record summary{{"rows", std::to_string(q.x.size())},
                   {"errors", std::to_string(errors)},
                   {"error_rate", format_real(static_cast<double>(errors) / static_cast<double>(q.x.size()))}};
    add_elapsed(summary, elapsed_since(t0));
    inv.tables.push_back({summary});
  }
}

void run_tune(Invocation& inv) {
  auto& kv = inv.kv;
  kv.require_known(with_swarm_keys({"data", "log2_C_min", "log2_C_max", "log2_gamma_min",
                                    "log2_gamma_max", "folds", "trace", "model", "policy", "tol",
                                    "max_passes"}));
  const auto data_path = inv.existing_file("data");
  const auto policy = parse_policy(kv.get_string("policy", "serial"));
  TunerConfig cfg;
  cfg.log2_C_min = kv.get_double("log2_C_min", cfg.log2_C_min);
  cfg.log2_C_max = kv.get_double("log2_C_max", cfg.log2_C_max);
  cfg.log2_gamma_min = kv.get_double("log2_gamma_min", cfg.log2_gamma_min);
  cfg.log2_gamma_max = kv.get_double("log2_gamma_max", cfg.log2_gamma_max);
  cfg.folds = positive_int(kv, "folds", static_cast<long long>(cfg.folds));
  SwarmConfig swarm_defaults;
  swarm_defaults.n_particles = 10;
  swarm_defaults.max_iterations = 20;
  cfg.swarm = SwarmConfig::from_config(kv, swarm_defaults);
  cfg.seed = inv.seed;
  cfg.train = train_options_from(kv, ExecPolicy::serial);
  cfg.validate();
  const auto trace_path = inv.path("trace");
  const auto model_path = inv.path("model");

  inv.note("data", data_path);
  inv.note("log2_C_min", format_real(cfg.log2_C_min));
  inv.note("log2_C_max", format_real(cfg.log2_C_max));
  inv.note("log2_gamma_min", format_real(cfg.log2_gamma_min));
  inv.note("log2_gamma_max", format_real(cfg.log2_gamma_max));
  inv.note("folds", std::to_string(cfg.folds));
  inv.note("tol", format_real(cfg.train.tol));
  inv.note("policy", to_string(policy));
  inv.note("trace", trace_path.value_or("none"));
  inv.note("model", model_path.value_or("none"));
  inv.note_swarm(cfg.swarm);
  inv.banner();

  const auto t0 = std::chrono::steady_clock::now();
  const auto data = load_dataset(data_path);
  const auto tuned = tune(data, cfg, policy);
  if (trace_path) {
    std::ofstream out(*trace_path);
    if (!out) throw DataError("cannot write trace file: " + *trace_path);
    write_trace(out, tuned.trace);
  }
  if (model_path) save_model(*model_path, tuned.model);
  Record rec{{"best_C", format_real(tuned.best_C)},
             {"best_gamma", format_real(tuned.best_gamma)},
             {"cv_error", format_real(tuned.cv_error)},
             {"evaluations", std::to_string(tuned.evaluations)},
             {"trace_records", std::to_string(tuned.trace.size())},
             {"n_support", std::to_string(tuned.model.n_support())},
             {"seed", std::to_string(inv.seed)}};
  add_elapsed(rec, elapsed_since(t0));
  inv.tables.push_back({rec});
}

void run_cobb(Invocation& inv) {
  auto& kv = inv.kv;
  kv.require_known(with_swarm_keys(
      {"mode", "alphas", "weights", "K", "beta_noise", "iterations", "rows", "seeds", "policy"}));
  const auto mode = kv.get_string("mode", kv.has("alphas") ? "instance" : "table");
  const auto policy = parse_policy(kv.get_string("policy", "serial"));
  const double beta_noise = kv.get_double("beta_noise", 0.01);
  inv.note("mode", mode);
  inv.note("beta_noise", format_real(beta_noise));
  inv.note("policy", to_string(policy));

  if (mode == "instance") {
    ProductionProblem p;
    p.alphas = real_list(kv, "alphas");
    p.weights = real_list(kv, "weights");
    p.K = kv.get_double("K", 0.0);
    p.beta_noise = beta_noise;
    p.seed = inv.seed;
    p.validate();
    const auto iterations = positive_int(kv, "iterations", 1000);
    const auto swarm = SwarmConfig::from_config(kv, production_swarm(iterations, inv.seed));
    inv.note("alphas", format_reals(p.alphas));
    inv.note("weights", format_reals(p.weights));
    inv.note("K", format_real(p.K));
    inv.note_swarm(swarm);
    inv.banner();

    RunOptions options;
    options.policy = policy;
    const auto report = solve_numerically(p, swarm, options);
    auto rec = to_record(report);
    prepend(rec, {{"n", std::to_string(p.size())},
                  {"budget", format_real(realized_budget(p))},
                  {"analytic_position", format_reals(analytic_solution(p))},
                  {"utility", format_real(utility(p, report.best_position))}});
    inv.tables.push_back({rec});
    return;
  }
  if (mode != "table") throw ConfigError("mode must be instance or table, got " + mode);

  for (const auto& key : kSwarmKeys) {
    if (key != "seed" && kv.has(key)) throw ConfigError("swarm key `" + key + "` applies to mode=instance only");
  }
  const auto spec = kv.get_string("rows", "2:1000,10:5000,50:5000,50:15000");
  std::vector<std::pair<std::size_t, std::size_t>> rows;
  for (const auto& item : split_list(spec)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("rows entries must be n:iterations, got " + item);
    rows.emplace_back(parse_count("rows", item.substr(0, colon)), parse_count("rows", item.substr(colon + 1)));
  }
  if (rows.empty()) throw ConfigError("rows is empty");
  std::string canonical;
  for (const auto& [n, it] : rows) canonical += (canonical.empty() ? "" : ",") + std::to_string(n) + ":" + std::to_string(it);
  const auto seeds = positive_int(kv, "seeds", 50);
  inv.note("rows", canonical);
  inv.note("seeds", std::to_string(seeds));
  inv.banner();

  std::vector<Record> out;
  for (const auto& [n, iterations] : rows) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto row = deviation_row(n, iterations, seeds, beta_noise, policy, inv.seed);
    Record rec{{"n", std::to_string(n)},
               {"iterations", std::to_string(iterations)},
               {"seeds", std::to_string(seeds)},
               {"first_seed", std::to_string(inv.seed)},
               {"mean_deviation", format_real(row.mean_deviation)},
               {"median_deviation", format_real(median(row.deviations))},
               {"max_deviation", format_real(*std::max_element(row.deviations.begin(), row.deviations.end()))}};
    add_elapsed(rec, elapsed_since(t0));
    out.push_back(std::move(rec));
  }
  inv.tables.push_back(std::move(out));
}

void run_adult(Invocation& inv) {
  auto& kv = inv.kv;
  kv.require_known({"data_dir", "train_sizes", "test_size", "C", "gamma", "cv_gamma_rows", "seeds",
                    "policy", "tol", "max_passes", "seed"});
  std::string dir;
  if (!inv.data_dir_flag.empty()) {
    dir = inv.data_dir_flag;
  } else if (const auto p = inv.path("data_dir")) {
    dir = *p;
  } else {
    dir = adult_dir_from_env(std::string(APSOSVM_DEFAULT_DATA_DIR) + "/adult");
  }
  if (!fs::is_directory(dir)) throw MissingFile("adult data directory not found: " + dir);
  const auto sizes = count_list(kv, "train_sizes", "512,1024");
  AdultBenchmark base;
  base.test_size = positive_int(kv, "test_size", static_cast<long long>(base.test_size));
  base.C = kv.get_double("C", base.C);
  base.gamma = kv.get_double("gamma", base.gamma);
  if (!(base.C > 0.0) || base.gamma < 0.0) throw ConfigError("C must be positive and gamma >= 0");
  const long long cv_rows = kv.get_int("cv_gamma_rows", 0);
  if (cv_rows < 0) throw ConfigError("cv_gamma_rows must be >= 0");
  base.cv_gamma_rows = static_cast<std::size_t>(cv_rows);
  const auto policy = parse_policy(kv.get_string("policy", "serial"));
  base.train = train_options_from(kv, ExecPolicy::serial);
  const auto seeds = positive_int(kv, "seeds", 1);

  inv.note("data_dir", dir);
  inv.note("train_sizes", join(sizes));
  inv.note("test_size", std::to_string(base.test_size));
  inv.note("C", format_real(base.C));
  inv.note("gamma", base.gamma > 0.0 ? format_real(base.gamma) : "auto");
  inv.note("cv_gamma_rows", std::to_string(base.cv_gamma_rows));
  inv.note("seeds", std::to_string(seeds));
  inv.note("policy", to_string(policy));
  inv.banner();

  const auto data = load_adult_dir(dir);
  std::vector<Record> runs, summary;
  for (const auto size : sizes) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> errors;
    for (std::size_t s = 0; s < seeds; ++s) {
      AdultBenchmark cfg = base;
      cfg.train_size = size;
      cfg.seed = inv.seed + s;
      const auto result = run_benchmark(data, cfg, policy);
      errors.push_back(result.error_percent);
      runs.push_back(to_record(result));
    }
    if (seeds > 1) {
      Record rec{{"train_size", std::to_string(size)},
                 {"test_size", std::to_string(base.test_size)},
                 {"seeds", std::to_string(seeds)},
                 {"median_error_percent", format_real(median(errors))},
                 {"mean_error_percent", format_real(mean(errors))}};
      add_elapsed(rec, elapsed_since(t0));
      summary.push_back(std::move(rec));
    }
  }
  inv.tables.push_back(std::move(runs));
  if (!summary.empty()) inv.tables.push_back(std::move(summary));
}

void run_rcpsp(Invocation& inv) {
  auto& kv = inv.kv;
  kv.require_known({"instances", "optima", "instance", "optimum", "budgets", "seeds", "policy",
                    "variant", "alpha0", "beta", "gamma", "theta", "schedule", "seed"});
  const auto policy = parse_policy(kv.get_string("policy", "serial"));
  const auto budgets = count_list(kv, "budgets", "1000,5000");
  // Particle count and iterations follow from the schedule budget.
  auto swarm = SwarmConfig::from_config(kv, scheduling_swarm(inv.seed));
  inv.note("budgets", join(budgets));
  inv.note("policy", to_string(policy));
  const auto swarm_kv = swarm.to_config();
  for (const auto* k : {"variant", "alpha0", "beta", "gamma", "theta", "schedule"}) {
    inv.note(k, swarm_kv.get_string(k, ""));
  }

  if (kv.has("instance")) {
    const auto path = inv.existing_file("instance");
    std::optional<int> optimum;
    if (kv.has("optimum")) optimum = static_cast<int>(kv.get_int("optimum", 0));
    if (optimum && *optimum <= 0) throw ConfigError("optimum must be positive");
    inv.note("instance", path);
    inv.note("optimum", optimum ? std::to_string(*optimum) : "none");
    inv.banner();
    const auto inst = parse_psplib(path);
    std::vector<Record> out;
    for (const auto budget : budgets) {
      const auto sol = solve(inst, swarm, budget, optimum, policy);
      const auto check = check_feasible(inst, sol.schedule);
      auto rec = to_record(sol.report);
      rec.erase(std::remove_if(rec.begin(), rec.end(), [](const auto& f) { return f.first == "best_position"; }),
                rec.end());
      prepend(rec, {{"instance", inst.name},
                    {"schedules", std::to_string(budget)},
                    {"makespan", std::to_string(sol.schedule.makespan())},
                    {"critical_path_bound", std::to_string(inst.critical_path_bound())},
                    {"feasible", check.feasible() ? "1" : "0"}});
      out.push_back(std::move(rec));
    }
    inv.tables.push_back(std::move(out));
    return;
  }

  const auto dir_opt = inv.path("instances");
  if (!dir_opt) throw ConfigError("rcpsp needs `instances` (a directory) or `instance` (a file)");
  const auto dir = *dir_opt;
  if (!fs::is_directory(dir)) throw MissingFile("instance directory not found: " + dir);
  const auto optima_path = inv.path("optima").value_or((fs::path(dir) / "optima.txt").string());
  if (!fs::is_regular_file(optima_path)) throw MissingFile("optima sidecar not found: " + optima_path);
  const auto seeds = positive_int(kv, "seeds", 20);
  inv.note("instances", dir);
  inv.note("optima", optima_path);
  inv.note("seeds", std::to_string(seeds));
  inv.banner();

  const auto instances = load_instance_dir(dir);
  const auto optima = load_optimum_sidecar(optima_path);
  std::vector<Record> out;
  for (const auto budget : budgets) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto row = deviation_table_row(instances, optima, budget, seeds, policy, inv.seed, swarm);
    auto rec = to_record(row);
    std::vector<double> percent;
    for (double d : row.deviations) percent.push_back(100.0 * d);
    rec.emplace_back("median_deviation_percent", format_real(median(percent)));
    rec.emplace_back("first_seed", std::to_string(inv.seed));
    add_elapsed(rec, elapsed_since(t0));
    out.push_back(std::move(rec));
  }
  inv.tables.push_back(std::move(out));
}

int fail(int code, const std::string& category, const std::string& message) {
  std::string line = message;
  std::replace(line.begin(), line.end(), '\n', ' ');
  std::cerr << "error category=" << category << " message=" << line << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"APSO optimizer, kernel SVM and benchmark runner"};
  app.require_subcommand(1, 1);
  Invocation inv;

  struct Sub {
    const char* name;
    const char* help;
    void (*run)(Invocation&);
  };
  const Sub subs[] = {
      {"optimize", "Minimize a named test function with a particle swarm", run_optimize},
      {"svm-train", "Train a kernel SVM and write the model file", run_svm_train},
      {"svm-predict", "Classify rows with a saved model", run_svm_predict},
      {"tune", "Swarm search over (C, gamma) by cross-validation", run_tune},
      {"cobb", "Cobb-Douglas production instance or deviation table", run_cobb},
      {"adult", "Census income classification benchmark", run_adult},
      {"rcpsp", "Project scheduling instance or deviation table", run_rcpsp},
  };
  for (const auto& sub : subs) {
    auto* cmd = app.add_subcommand(sub.name, sub.help);
    cmd->add_option("--config", inv.config_path, "Key/value config file");
    cmd->add_option("--seed", inv.seed_flag, "Seed (overrides the config; default 0)");
    cmd->add_option("--out", inv.out_path, "Write results here instead of stdout");
    cmd->add_option("--format", inv.format, "Output format")->check(CLI::IsMember({"table", "records"}));
    if (std::string(sub.name) == "adult") {
      cmd->add_option("--data-dir", inv.data_dir_flag,
                      "Directory with adult.data and adult.test (else config, then APSOSVM_ADULT_DIR)");
    }
    cmd->callback([&inv, name = sub.name] { inv.subcommand = name; });
  }

  if (argc > 1 && argv[1][0] != '-' &&
      std::none_of(std::begin(subs), std::end(subs),
                   [&](const Sub& s) { return std::string(argv[1]) == s.name; })) {
    return fail(exit_usage, "usage", std::string("unknown subcommand: ") + argv[1]);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(exit_usage, "usage", e.what());
  }

  try {
    inv.load();
    for (const auto& sub : subs) {
      if (inv.subcommand == sub.name) sub.run(inv);
    }
    inv.emit();
    return exit_ok;
  } catch (const MissingFile& e) {
    return fail(exit_missing_file, "missing_file", e.what());
  } catch (const ConfigError& e) {
    return fail(exit_config, "config", e.what());
  } catch (const ConvergenceError& e) {
    return fail(exit_convergence, "convergence", e.what());
  } catch (const DataError& e) {
    return fail(exit_data, "data", e.what());
  } catch (const std::exception& e) {
    return fail(exit_internal, "internal", e.what());
  }
}
