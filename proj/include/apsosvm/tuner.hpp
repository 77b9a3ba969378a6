#pragma once

// Kernel-parameter search: a swarm explores (log2 C, log2 gamma) and each
// candidate is scored by stratified k-fold cross-validation error. The final
// model is trained on all data at the best pair found.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "apsosvm/apso.hpp"
#include "apsosvm/svm.hpp"

namespace apsosvm {

struct TunerConfig {
  double log2_C_min = -5.0;
  double log2_C_max = 15.0;
  double log2_gamma_min = -15.0;
  double log2_gamma_max = 3.0;
  std::size_t folds = 5;
  SwarmConfig swarm;
  /// Seeds the fold assignment; the swarm uses swarm.seed.
  std::uint64_t seed = 0;
  TrainOptions train;

  void validate() const;
};

struct TraceRecord {
  std::size_t iteration;
  double C;
  double gamma;
  double cv_error;
};

struct TunedModel {
  SvmModel model;
  double best_C = 0.0;
  double best_gamma = 0.0;
  double cv_error = 1.0;
  std::size_t evaluations = 0;
  std::vector<TraceRecord> trace;

  double best_sigma2() const { return 1.0 / (2.0 * best_gamma); }
};

/// Per-class shuffled round-robin assignment of rows to `folds` folds.
std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<int>& labels,
                                                       std::size_t folds, std::uint64_t seed);

/// Mean held-out misclassification rate over stratified folds.
double cv_error(const Dataset& data, const KernelSpec& kernel, double C, std::size_t folds,
                std::uint64_t seed, const TrainOptions& train = {});

TunedModel tune(const Dataset& data, const TunerConfig& cfg,
                ExecPolicy policy = ExecPolicy::serial);

/// One `iteration C gamma cv_error` line per evaluation, with a header.
void write_trace(std::ostream& out, const std::vector<TraceRecord>& trace);

}  // namespace apsosvm
