#include "apsosvm/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "apsosvm/errors.hpp"
#include "apsosvm/report.hpp"

namespace apsosvm {

void TunerConfig::validate() const {
  if (!(log2_C_min < log2_C_max)) throw ConfigError("log2 C range is degenerate");
  if (!(log2_gamma_min < log2_gamma_max)) throw ConfigError("log2 gamma range is degenerate");
  if (folds < 2) throw ConfigError("folds must be >= 2");
  swarm.validate();
}

std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<int>& labels,
                                                       std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (folds > labels.size() / 2) throw DataError("too many folds for the dataset size");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
  // Each training split needs both classes, so every class must span two folds.
  if (pos.size() < 2 || neg.size() < 2) {
    throw DataError("each class needs at least two rows for stratified folds");
  }
  std::mt19937_64 gen(seed);
  std::shuffle(pos.begin(), pos.end(), gen);
  std::shuffle(neg.begin(), neg.end(), gen);

  std::vector<std::vector<std::size_t>> out(folds);
  std::size_t next = 0;
  for (const auto* cls : {&pos, &neg}) {
    for (auto idx : *cls) out[next++ % folds].push_back(idx);
  }
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

double cv_error(const Dataset& data, const KernelSpec& kernel, double C, std::size_t folds,
                std::uint64_t seed, const TrainOptions& train) {
  data.validate(true);
  const auto split = stratified_folds(data.labels, folds, seed);
  double total = 0.0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_rows;
    for (std::size_t g = 0; g < folds; ++g) {
      if (g != f) train_rows.insert(train_rows.end(), split[g].begin(), split[g].end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    const auto model = train_detailed(data.subset(train_rows), kernel, C, train).model;
    total += error_rate(model, data.subset(split[f]));
  }
  return total / static_cast<double>(folds);
}

TunedModel tune(const Dataset& data, const TunerConfig& cfg, ExecPolicy policy) {
  cfg.validate();
  data.validate(true);
  stratified_folds(data.labels, cfg.folds, cfg.seed);  // fail early on infeasible splits

  ObjectiveSpec spec;
  spec.lower_bounds = {cfg.log2_C_min, cfg.log2_gamma_min};
  spec.upper_bounds = {cfg.log2_C_max, cfg.log2_gamma_max};
  spec.evaluate = [&](std::span<const double> p) {
    try {
      return cv_error(data, KernelSpec::rbf(std::exp2(p[1])), std::exp2(p[0]), cfg.folds, cfg.seed,
                      cfg.train);
    } catch (const ConvergenceError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };

  TunedModel out;
  RunOptions options;
  options.policy = policy;
  options.initial_positions = {{cfg.log2_C_min, cfg.log2_gamma_min},
                               {cfg.log2_C_min, cfg.log2_gamma_max},
                               {cfg.log2_C_max, cfg.log2_gamma_min},
                               {cfg.log2_C_max, cfg.log2_gamma_max}};
  if (cfg.swarm.n_particles < options.initial_positions.size()) {
    options.initial_positions.resize(cfg.swarm.n_particles);
  }
  options.observer = [&](const EvaluationRecord& e) {
    out.trace.push_back({e.iteration, std::exp2(e.position[0]), std::exp2(e.position[1]), e.fitness});
  };

  const auto run = optimize(spec, cfg.swarm, options);
  if (!std::isfinite(run.best_fitness)) {
    throw ConvergenceError("no kernel parameter pair could be trained", run.best_fitness);
  }
  out.best_C = std::exp2(run.best_position[0]);
  out.best_gamma = std::exp2(run.best_position[1]);
  out.cv_error = run.best_fitness;
  out.evaluations = run.evaluations;
  out.model = train_detailed(data, KernelSpec::rbf(out.best_gamma), out.best_C, cfg.train).model;
  return out;
}

void write_trace(std::ostream& out, const std::vector<TraceRecord>& trace) {
  out << "iteration C gamma cv_error\n";
  for (const auto& r : trace) {
    out << r.iteration << ' ' << format_real(r.C) << ' ' << format_real(r.gamma) << ' '
        << format_real(r.cv_error) << '\n';
  }
}

}  // namespace apsosvm
