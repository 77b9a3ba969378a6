#pragma once

// Cobb-Douglas production: q(u) = prod_j u_j^a_j with sum_j a_j = 1, spent
// against the budget sum_j w_j u_j = K (optionally perturbed to K(1 + b*eps)).

#include <cstdint>
#include <span>
#include <vector>

#include "apsosvm/apso.hpp"
#include "apsosvm/report.hpp"

namespace apsosvm {

struct ProductionProblem {
  std::vector<double> alphas;
  std::vector<double> weights;
  double K = 1.0;
  double beta_noise = 0.0;  // budget noise amplitude, in [0, 1)
  std::uint64_t seed = 0;   // draws the budget noise

  std::size_t size() const { return alphas.size(); }
  void validate() const;

  /// n = 2, a = (2/3, 1/3), w = (5, 2), K = 300; optimum (40, 50).
  static ProductionProblem two_good_example();
  /// Exponents uniform then normalized, weights in [1, 10], K = 100 n.
  static ProductionProblem random(std::size_t n, std::uint64_t seed, double beta_noise);
};

/// prod u_j^a_j, evaluated as exp(sum a_j log u_j). Requires u_j > 0.
double utility(const ProductionProblem& p, std::span<const double> u);

/// Lagrange stationary point on sum w_j u_j = budget.
std::vector<double> analytic_solution(const ProductionProblem& p, double budget);
std::vector<double> analytic_solution(const ProductionProblem& p);

/// K (1 + beta_noise * eps), eps ~ N(0, 1) drawn from p.seed.
double realized_budget(const ProductionProblem& p);

/// Euclidean projection onto {w.u = budget, u_j >= floor_j}.
std::vector<double> project_to_budget(std::span<const double> u, std::span<const double> weights,
                                      std::span<const double> floor, double budget);

/// Sum of squared first-order residuals a_j/u_j + lambda w_j at the
/// least-squares multiplier lambda. This is the Lagrangian gradient divided
/// by q, so it vanishes exactly at stationary points.
/// Central projection: moves u along the ray from `floor` until w.u = budget.
/// Keeps every coordinate strictly above its floor when u is.
std::vector<double> scale_to_budget(std::span<const double> u, std::span<const double> weights,
                                    std::span<const double> floor, double budget);

double stationarity_residual(const ProductionProblem& p, std::span<const double> u);

/// mean_j |u_j - ref_j| / ref_j over components with ref_j > 0.
double mean_relative_deviation(std::span<const double> u, std::span<const double> ref);

/// Swarm search over the box (0, K/w_j]; candidates are projected onto the
/// realized budget before scoring. deviation is measured against the
/// noise-free closed form.
RunReport solve_numerically(const ProductionProblem& p, const SwarmConfig& cfg,
                            const RunOptions& options = {});

/// Swarm settings used by the deviation table: single-step APSO whose
/// randomness decays to ~1e-4 of alpha0 by the last iteration.
SwarmConfig production_swarm(std::size_t iterations, std::uint64_t seed);

struct DeviationRow {
  std::size_t n;
  std::size_t iterations;
  double mean_deviation;
  std::vector<double> deviations;  // one per seed
};

/// Mean deviation over `seeds` random problems of size n. Seed
/// first_seed + k drives both the k-th instance and its swarm. Seeds run in
/// parallel when policy says so.
DeviationRow deviation_row(std::size_t n, std::size_t iterations, std::size_t seeds,
                           double beta_noise, ExecPolicy policy = ExecPolicy::serial,
                           std::uint64_t first_seed = 0);

}  // namespace apsosvm
