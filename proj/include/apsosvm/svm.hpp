#pragma once

// Binary soft-margin kernel SVM.
//
// Training solves the dual
//   maximize   sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//   subject to sum_i a_i y_i = 0,  0 <= a_i <= C
// with a two-coordinate (SMO) solver that picks the maximal violating pair.
// The primal slacks are never stored; they are max(0, 1 - y_i f(x_i)).

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "apsosvm/apso.hpp"

namespace apsosvm {

/// n points in d dimensions (row-major) with labels in {-1, +1}.
struct Dataset {
  std::size_t dim = 0;
  std::vector<double> points;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const { return {points.data() + i * dim, dim}; }
  void add(std::span<const double> x, int label);

  /// Throws DataError on shape or label problems; `require_both_classes` for training.
  void validate(bool require_both_classes) const;
  Dataset subset(std::span<const std::size_t> indices) const;
};

enum class KernelKind { linear, polynomial, tanh, rbf };

std::string to_string(KernelKind kind);
KernelKind parse_kernel_kind(const std::string& name);

struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  int degree = 3;             // polynomial: (x.x')^degree
  double k_scale = 1.0;       // tanh(k_scale * x.x' + theta_offset)
  double theta_offset = 0.0;
  double gamma = 1.0;         // rbf: exp(-gamma |x - x'|^2), gamma = 1 / (2 sigma^2)

  static KernelSpec linear() { return {KernelKind::linear}; }
  static KernelSpec rbf(double gamma) {
    KernelSpec k;
    k.gamma = gamma;
    return k;
  }
  void validate() const;
};

double kernel_eval(const KernelSpec& k, std::span<const double> x, std::span<const double> x2);

/// Full n x n kernel matrix, computed row by row.
std::vector<double> gram_matrix_serial(const Dataset& data, const KernelSpec& kernel);
/// Same values as gram_matrix_serial; rows distributed over OpenMP threads.
std::vector<double> gram_matrix_parallel(const Dataset& data, const KernelSpec& kernel);

struct SvmModel {
  KernelSpec kernel;
  double C = 1.0;
  double bias = 0.0;
  std::size_t dim = 0;
  std::vector<double> support_points;  // row-major m x dim
  std::vector<double> dual_weights;    // a_i * y_i, one per support point
  /// Row of each support point in the training set. Not serialized.
  std::vector<std::size_t> support_indices;

  std::size_t n_support() const { return dual_weights.size(); }
  std::span<const double> support_point(std::size_t i) const {
    return {support_points.data() + i * dim, dim};
  }
};

struct TrainOptions {
  double tol = 1e-3;
  /// Iteration cap is max_passes * n pair updates.
  std::size_t max_passes = 10000;
  /// Above this size the Gram matrix is replaced by an LRU row cache.
  std::size_t dense_limit = 4096;
  std::size_t cache_bytes = std::size_t{256} << 20;
  ExecPolicy policy = ExecPolicy::serial;
};

struct TrainResult {
  SvmModel model;
  std::vector<double> alpha;  // one per training point
  double dual_objective = 0.0;
  double final_gap = 0.0;
  std::size_t iterations = 0;
};

TrainResult train_detailed(const Dataset& data, const KernelSpec& kernel, double C,
                           const TrainOptions& options = {});
SvmModel train(const Dataset& data, const KernelSpec& kernel, double C, double tol = 1e-3);

double decision_value(const SvmModel& model, std::span<const double> x);
/// sgn(decision_value), with sgn(0) = +1.
int predict(const SvmModel& model, std::span<const double> x);
/// Fraction of misclassified rows.
double error_rate(const SvmModel& model, const Dataset& data);

/// sum_i a_i - 1/2 a^T Q a with Q_ij = y_i y_j K(x_i, x_j).
double dual_objective(const Dataset& data, const KernelSpec& kernel, std::span<const double> alpha);

struct KktReport {
  double equality_residual = 0.0;  // |sum a_i y_i|
  double box_residual = 0.0;       // distance of any a_i outside [0, C]
  double zero_residual = 0.0;      // a_i = 0      needs y_i f(x_i) >= 1
  double free_residual = 0.0;      // 0 < a_i < C  needs y_i f(x_i) = 1
  double bound_residual = 0.0;     // a_i = C      needs y_i f(x_i) <= 1
  bool pass = true;
  std::vector<std::string> violations;

  double worst() const;
};

/// Per-point multipliers of `model` on its training set. Support points are
/// matched by stored index when available, otherwise by exact coordinates.
std::vector<double> recover_alpha(const SvmModel& model, const Dataset& data);

KktReport verify_kkt(const SvmModel& model, const Dataset& data, double tol);

/// Rows of `label x_1 ... x_d` with labels -1 or +1; `#` comments and blank
/// lines are skipped. Throws DataError with the line number.
Dataset load_dataset(std::istream& in);
Dataset load_dataset(const std::string& path);
void save_dataset(std::ostream& out, const Dataset& data);

/// Text format: header lines, then one `dual_weight x_1 ... x_d` row per
/// support vector. Reals are printed with 17 significant digits.
void save_model(std::ostream& out, const SvmModel& model);
SvmModel load_model(std::istream& in);
void save_model(const std::string& path, const SvmModel& model);
SvmModel load_model(const std::string& path);

}  // namespace apsosvm
