#include "apsosvm/apso.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "apsosvm/errors.hpp"

namespace apsosvm {

void ObjectiveSpec::validate() const {
  if (lower_bounds.empty()) throw ConfigError("objective dimension must be positive");
  if (lower_bounds.size() != upper_bounds.size()) {
    throw ConfigError("lower and upper bounds differ in length");
  }
  for (std::size_t k = 0; k < lower_bounds.size(); ++k) {
    if (!(lower_bounds[k] < upper_bounds[k])) {
      throw ConfigError("bounds must satisfy lower < upper in dimension " + std::to_string(k));
    }
  }
  if (!evaluate) throw ConfigError("objective has no evaluate function");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::pso_standard: return "pso_standard";
    case Variant::pso_inertia: return "pso_inertia";
    case Variant::apso_velocity: return "apso_velocity";
    case Variant::apso_single_step: return "apso_single_step";
  }
  return "?";
}

std::string to_string(AlphaSchedule s) {
  switch (s) {
    case AlphaSchedule::exponential_decay: return "exponential_decay";
    case AlphaSchedule::geometric_decay: return "geometric_decay";
    case AlphaSchedule::constant: return "constant";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  for (auto v : {Variant::pso_standard, Variant::pso_inertia, Variant::apso_velocity,
                 Variant::apso_single_step}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown variant `" + name + "`");
}

AlphaSchedule parse_schedule(const std::string& name) {
  for (auto s : {AlphaSchedule::exponential_decay, AlphaSchedule::geometric_decay,
                 AlphaSchedule::constant}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown schedule `" + name + "`");
}

// alpha0 = 0 and beta = 0 are accepted so the degenerate update rules can be
// exercised directly.
void SwarmConfig::validate() const {
  if (n_particles == 0) throw ConfigError("n_particles must be positive");
  if (max_iterations == 0) throw ConfigError("max_iterations must be positive");
  if (!(alpha0 >= 0.0) || !std::isfinite(alpha0)) throw ConfigError("alpha0 must be >= 0");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  if (schedule != AlphaSchedule::constant && !(gamma > 0.0 && gamma < 1.0)) {
    throw ConfigError("gamma must lie in (0, 1) for decaying schedules");
  }
  if (variant == Variant::pso_inertia && !(theta > 0.0 && theta < 1.0)) {
    throw ConfigError("theta must lie in (0, 1)");
  }
}

SwarmConfig SwarmConfig::from_config(const KeyValueConfig& kv, const SwarmConfig& defaults) {
  SwarmConfig cfg = defaults;
  const auto positive = [&](const char* key, std::size_t fallback) {
    const long long v = kv.get_int(key, static_cast<long long>(fallback));
    if (v <= 0) throw ConfigError(std::string(key) + " must be positive");
    return static_cast<std::size_t>(v);
  };
  cfg.variant = parse_variant(kv.get_string("variant", to_string(defaults.variant)));
  cfg.schedule = parse_schedule(kv.get_string("schedule", to_string(defaults.schedule)));
  cfg.n_particles = positive("n_particles", defaults.n_particles);
  cfg.max_iterations = positive("max_iterations", defaults.max_iterations);
  cfg.alpha0 = kv.get_double("alpha0", defaults.alpha0);
  cfg.beta = kv.get_double("beta", defaults.beta);
  cfg.gamma = kv.get_double("gamma", defaults.gamma);
  cfg.theta = kv.get_double("theta", defaults.theta);
  cfg.seed = kv.get_u64("seed", defaults.seed);
  cfg.validate();
  return cfg;
}

SwarmConfig SwarmConfig::from_config(const KeyValueConfig& kv) {
  return from_config(kv, SwarmConfig{});
}

KeyValueConfig SwarmConfig::to_config() const {
  KeyValueConfig kv;
  kv.set("variant", to_string(variant));
  kv.set("n_particles", std::to_string(n_particles));
  kv.set("max_iterations", std::to_string(max_iterations));
  kv.set("alpha0", format_real(alpha0));
  kv.set("beta", format_real(beta));
  kv.set("gamma", format_real(gamma));
  kv.set("theta", format_real(theta));
  kv.set("schedule", to_string(schedule));
  kv.set("seed", std::to_string(seed));
  return kv;
}

double alpha_at(const SwarmConfig& cfg, std::size_t t) {
  const double tt = static_cast<double>(t);
  switch (cfg.schedule) {
    case AlphaSchedule::exponential_decay: return cfg.alpha0 * std::exp(-cfg.gamma * tt);
    case AlphaSchedule::geometric_decay: return cfg.alpha0 * std::pow(cfg.gamma, tt);
    case AlphaSchedule::constant: return cfg.alpha0;
  }
  return cfg.alpha0;
}

void evaluate_swarm_serial(const ObjectiveSpec& spec, std::span<const double> positions,
                           std::size_t count, std::span<double> fitness) {
  const std::size_t d = spec.dimension();
  for (std::size_t i = 0; i < count; ++i) {
    fitness[i] = spec.evaluate(positions.subspan(i * d, d));
  }
}

void evaluate_swarm_parallel(const ObjectiveSpec& spec, std::span<const double> positions,
                             std::size_t count, std::span<double> fitness) {
  const std::size_t d = spec.dimension();
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    fitness[row] = spec.evaluate(positions.subspan(row * d, d));
  }
}

namespace {

void evaluate(const ObjectiveSpec& spec, const RunOptions& options,
              std::span<const double> positions, std::size_t count, std::span<double> fitness) {
  if (options.policy == ExecPolicy::parallel) {
    evaluate_swarm_parallel(spec, positions, count, fitness);
  } else {
    evaluate_swarm_serial(spec, positions, count, fitness);
  }
}

void clamp_row(std::span<double> row, const ObjectiveSpec& spec) {
  for (std::size_t k = 0; k < row.size(); ++k) {
    row[k] = std::clamp(row[k], spec.lower_bounds[k], spec.upper_bounds[k]);
  }
}

bool uses_velocity(Variant v) { return v != Variant::apso_single_step; }
bool uses_personal_best(Variant v) {
  return v == Variant::pso_standard || v == Variant::pso_inertia;
}

}  // namespace

SwarmState init_swarm(const ObjectiveSpec& spec, const SwarmConfig& cfg,
                      const RunOptions& options) {
  spec.validate();
  cfg.validate();
  const std::size_t n = cfg.n_particles;
  const std::size_t d = spec.dimension();
  if (options.initial_positions.size() > n) {
    throw ConfigError("more initial positions than particles");
  }

  SwarmState s;
  s.n_particles = n;
  s.dimension = d;
  s.rng.seed(cfg.seed);
  s.positions.resize(n * d);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      const double lo = spec.lower_bounds[k];
      const double hi = spec.upper_bounds[k];
      s.positions[i * d + k] = lo + unit(s.rng) * (hi - lo);
    }
  }
  for (std::size_t i = 0; i < options.initial_positions.size(); ++i) {
    const auto& seed_row = options.initial_positions[i];
    if (seed_row.size() != d) throw ConfigError("initial position has wrong dimension");
    std::span<double> row(s.positions.data() + i * d, d);
    std::copy(seed_row.begin(), seed_row.end(), row.begin());
    clamp_row(row, spec);
  }
  if (uses_velocity(cfg.variant)) s.velocities.assign(n * d, 0.0);

  s.fitness.resize(n);
  evaluate(spec, options, s.positions, n, s.fitness);
  s.evaluations = n;

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::size_t best = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (options.observer) options.observer({s.iteration, i, s.position(i), s.fitness[i]});
    if (!std::isfinite(s.fitness[i])) {
      s.fitness[i] = inf;
      ++s.rejected_moves;
    }
    if (s.fitness[i] < s.fitness[best]) best = i;
  }
  if (uses_personal_best(cfg.variant)) {
    s.personal_best_positions = s.positions;
    s.personal_best_fitness = s.fitness;
  }
  s.global_best_position.assign(s.positions.begin() + best * d, s.positions.begin() + (best + 1) * d);
  s.global_best_fitness = s.fitness[best];
  return s;
}

bool step(SwarmState& s, const ObjectiveSpec& spec, const SwarmConfig& cfg,
          const RunOptions& options) {
  const std::size_t n = s.n_particles;
  const std::size_t d = s.dimension;
  std::size_t movers = n;
  if (options.evaluation_limit != 0) {
    if (s.evaluations >= options.evaluation_limit) return false;
    movers = std::min(n, options.evaluation_limit - s.evaluations);
  }

  const double alpha = alpha_at(cfg, s.iteration);
  const double beta = cfg.beta;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const std::vector<double> previous(s.positions.begin(), s.positions.begin() + movers * d);
  const auto& g = s.global_best_position;

  for (std::size_t i = 0; i < movers; ++i) {
    double* x = s.positions.data() + i * d;
    double* v = s.has_velocity() ? s.velocities.data() + i * d : nullptr;
    for (std::size_t k = 0; k < d; ++k) {
      const double range = spec.upper_bounds[k] - spec.lower_bounds[k];
      switch (cfg.variant) {
        case Variant::pso_standard:
        case Variant::pso_inertia: {
          const double e1 = unit(s.rng);
          const double e2 = unit(s.rng);
          const double p = s.personal_best_positions[i * d + k];
          const double carry = cfg.variant == Variant::pso_inertia ? cfg.theta * v[k] : v[k];
          v[k] = carry + alpha * e1 * (g[k] - x[k]) + beta * e2 * (p - x[k]);
          x[k] += v[k];
          break;
        }
        case Variant::apso_velocity: {
          const double e = normal(s.rng);
          v[k] = v[k] + alpha * range * e + beta * (g[k] - x[k]);
          x[k] += v[k];
          break;
        }
        case Variant::apso_single_step: {
          const double e = normal(s.rng);
          x[k] = (1.0 - beta) * x[k] + beta * g[k] + alpha * range * e;
          break;
        }
      }
    }
    clamp_row({x, d}, spec);
  }

  std::vector<double> trial(movers);
  evaluate(spec, options, std::span<const double>(s.positions.data(), movers * d), movers, trial);
  s.evaluations += movers;
  ++s.iteration;

  for (std::size_t i = 0; i < movers; ++i) {
    if (options.observer) options.observer({s.iteration, i, s.position(i), trial[i]});
    if (!std::isfinite(trial[i])) {
      std::copy_n(previous.begin() + i * d, d, s.positions.begin() + i * d);
      if (s.has_velocity()) std::fill_n(s.velocities.begin() + i * d, d, 0.0);
      ++s.rejected_moves;
    } else {
      s.fitness[i] = trial[i];
    }
    if (s.has_personal_best() && s.fitness[i] < s.personal_best_fitness[i]) {
      s.personal_best_fitness[i] = s.fitness[i];
      std::copy_n(s.positions.begin() + i * d, d, s.personal_best_positions.begin() + i * d);
    }
  }
  // The incumbent is refreshed only after every particle moved against the
  // same attractor, which keeps the update synchronous.
  for (std::size_t i = 0; i < movers; ++i) {
    if (s.fitness[i] < s.global_best_fitness) {
      s.global_best_fitness = s.fitness[i];
      std::copy_n(s.positions.begin() + i * d, d, s.global_best_position.begin());
    }
  }
  return true;
}

RunReport optimize(const ObjectiveSpec& spec, const SwarmConfig& cfg, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  SwarmState s = init_swarm(spec, cfg, options);
  for (std::size_t t = 0; t < cfg.max_iterations; ++t) {
    if (!step(s, spec, cfg, options)) break;
  }
  RunReport r;
  r.best_position = s.global_best_position;
  r.best_fitness = s.global_best_fitness;
  r.evaluations = s.evaluations;
  r.seed = cfg.seed;
  r.rejected_moves = s.rejected_moves;
  r.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace apsosvm
