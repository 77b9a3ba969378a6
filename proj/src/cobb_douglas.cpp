#include "apsosvm/cobb_douglas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "apsosvm/errors.hpp"

namespace apsosvm {

void ProductionProblem::validate() const {
  if (alphas.empty()) throw ConfigError("production problem needs at least one good");
  if (weights.size() != alphas.size()) throw ConfigError("weights and exponents differ in length");
  double sum = 0.0;
  for (double a : alphas) {
    if (!(a >= 0.0)) throw ConfigError("exponents must be non-negative");
    sum += a;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("exponents must sum to one");
  for (double w : weights) {
    if (!(w > 0.0)) throw ConfigError("weights must be positive");
  }
  if (!(K > 0.0)) throw ConfigError("budget K must be positive");
  if (!(beta_noise >= 0.0 && beta_noise < 1.0)) throw ConfigError("beta_noise must lie in [0, 1)");
}

ProductionProblem ProductionProblem::two_good_example() {
  ProductionProblem p;
  p.alphas = {2.0 / 3.0, 1.0 / 3.0};
  p.weights = {5.0, 2.0};
  p.K = 300.0;
  return p;
}

ProductionProblem ProductionProblem::random(std::size_t n, std::uint64_t seed, double beta_noise) {
  if (n == 0) throw ConfigError("n must be positive");
  std::mt19937_64 gen(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> share(0.1, 1.0), cost(1.0, 10.0);
  ProductionProblem p;
  p.alphas.resize(n);
  p.weights.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    p.alphas[j] = share(gen);
    p.weights[j] = cost(gen);
  }
  const double total = std::accumulate(p.alphas.begin(), p.alphas.end(), 0.0);
  for (auto& a : p.alphas) a /= total;
  // Absorb rounding so the exponents sum to one.
  p.alphas.back() = 1.0 - std::accumulate(p.alphas.begin(), p.alphas.end() - 1, 0.0);
  p.K = 100.0 * static_cast<double>(n);
  p.beta_noise = beta_noise;
  p.seed = seed;
  return p;
}

double utility(const ProductionProblem& p, std::span<const double> u) {
  if (u.size() != p.size()) throw DataError("utility: wrong number of quantities");
  double log_q = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (!(u[j] > 0.0)) throw DataError("utility is undefined for non-positive quantities");
    log_q += p.alphas[j] * std::log(u[j]);
  }
  return std::exp(log_q);
}

std::vector<double> analytic_solution(const ProductionProblem& p, double budget) {
  p.validate();
  const std::size_t n = p.size();
  // The closed form divides by the lead exponent, so lead with a nonzero one.
  const std::size_t lead = static_cast<std::size_t>(
      std::find_if(p.alphas.begin(), p.alphas.end(), [](double a) { return a > 0.0; }) -
      p.alphas.begin());
  double ratio_sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j != lead) ratio_sum += p.alphas[j];
  }
  std::vector<double> u(n);
  u[lead] = budget / (p.weights[lead] * (1.0 + ratio_sum / p.alphas[lead]));
  for (std::size_t j = 0; j < n; ++j) {
    if (j != lead) u[j] = p.weights[lead] * p.alphas[j] / (p.weights[j] * p.alphas[lead]) * u[lead];
  }
  return u;
}

std::vector<double> analytic_solution(const ProductionProblem& p) {
  return analytic_solution(p, p.K);
}

double realized_budget(const ProductionProblem& p) {
  if (p.beta_noise == 0.0) return p.K;
  std::mt19937_64 gen(p.seed);
  std::normal_distribution<double> eps(0.0, 1.0);
  return p.K * (1.0 + p.beta_noise * eps(gen));
}

std::vector<double> project_to_budget(std::span<const double> u, std::span<const double> weights,
                                      std::span<const double> floor, double budget) {
  const std::size_t n = u.size();
  double target = budget;
  std::vector<double> z(n);
  for (std::size_t j = 0; j < n; ++j) {
    z[j] = u[j] - floor[j];
    target -= weights[j] * floor[j];
  }
  if (!(target > 0.0)) throw DataError("budget does not cover the positivity floor");

  // v_j(mu) = max(0, z_j + mu w_j); w.v(mu) is piecewise linear and
  // increasing with breakpoints -z_j / w_j.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> brk(n);
  for (std::size_t j = 0; j < n; ++j) brk[j] = -z[j] / weights[j];
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return brk[a] < brk[b]; });

  double sum_wz = 0.0, sum_ww = 0.0, mu = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto j = order[k];
    sum_wz += weights[j] * z[j];
    sum_ww += weights[j] * weights[j];
    mu = (target - sum_wz) / sum_ww;
    if (k + 1 == n || mu <= brk[order[k + 1]]) break;
  }
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = floor[j] + std::max(0.0, z[j] + mu * weights[j]);
  return out;
}

std::vector<double> scale_to_budget(std::span<const double> u, std::span<const double> weights,
                                    std::span<const double> floor, double budget) {
  const std::size_t n = u.size();
  double target = budget, spent = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    target -= weights[j] * floor[j];
    spent += weights[j] * (u[j] - floor[j]);
  }
  if (!(target > 0.0)) throw DataError("budget does not cover the positivity floor");
  if (!(spent > 0.0)) throw DataError("cannot scale a point sitting on the floor");
  const double factor = target / spent;
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = floor[j] + (u[j] - floor[j]) * factor;
  return out;
}

double stationarity_residual(const ProductionProblem& p, std::span<const double> u) {
  const std::size_t n = p.size();
  double gw = 0.0, ww = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    gw += p.alphas[j] / u[j] * p.weights[j];
    ww += p.weights[j] * p.weights[j];
  }
  const double lambda = -gw / ww;
  double r = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double e = p.alphas[j] / u[j] + lambda * p.weights[j];
    r += e * e;
  }
  return r;
}

double mean_relative_deviation(std::span<const double> u, std::span<const double> ref) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (ref[j] > 0.0) {
      sum += std::abs(u[j] - ref[j]) / ref[j];
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

RunReport solve_numerically(const ProductionProblem& p, const SwarmConfig& cfg,
                            const RunOptions& options) {
  p.validate();
  const std::size_t n = p.size();
  const double budget = realized_budget(p);
  std::vector<double> floor(n), upper(n);
  for (std::size_t j = 0; j < n; ++j) {
    upper[j] = p.K / p.weights[j];
    floor[j] = 1e-9 * upper[j];
  }
  const double floor_cost = std::inner_product(floor.begin(), floor.end(), p.weights.begin(), 0.0);

  ObjectiveSpec spec;
  spec.lower_bounds = floor;
  spec.upper_bounds = upper;
  spec.evaluate = [&](std::span<const double> u) {
    const double spent = std::inner_product(u.begin(), u.end(), p.weights.begin(), 0.0);
    if (!(spent > floor_cost)) return std::numeric_limits<double>::infinity();
    return stationarity_residual(p, scale_to_budget(u, p.weights, floor, budget));
  };
  RunReport r = optimize(spec, cfg, options);
  r.best_position = scale_to_budget(r.best_position, p.weights, floor, budget);
  r.deviation = mean_relative_deviation(r.best_position, analytic_solution(p));
  return r;
}

SwarmConfig production_swarm(std::size_t iterations, std::uint64_t seed) {
  SwarmConfig cfg;
  cfg.variant = Variant::apso_single_step;
  cfg.schedule = AlphaSchedule::exponential_decay;
  cfg.n_particles = 25;
  cfg.max_iterations = iterations;
  cfg.alpha0 = 0.5;
  cfg.beta = 0.2;
  // Randomness falls to 1e-4 of alpha0 by the last iteration.
  cfg.gamma = std::log(1e4) / static_cast<double>(std::max<std::size_t>(iterations, 1));
  cfg.seed = seed;
  return cfg;
}

DeviationRow deviation_row(std::size_t n, std::size_t iterations, std::size_t seeds,
                           double beta_noise, ExecPolicy policy, std::uint64_t first_seed) {
  DeviationRow row{n, iterations, 0.0, std::vector<double>(seeds)};
  const auto count = static_cast<long long>(seeds);
  const auto run = [&](long long s) {
    const auto seed = first_seed + static_cast<std::uint64_t>(s);
    const auto p = ProductionProblem::random(n, seed, beta_noise);
    row.deviations[static_cast<std::size_t>(s)] = *solve_numerically(p, production_swarm(iterations, seed)).deviation;
  };
  if (policy == ExecPolicy::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long long s = 0; s < count; ++s) run(s);
  } else {
    for (long long s = 0; s < count; ++s) run(s);
  }
  row.mean_deviation = std::accumulate(row.deviations.begin(), row.deviations.end(), 0.0) /
                       static_cast<double>(std::max<std::size_t>(seeds, 1));
  return row;
}

}  // namespace apsosvm
