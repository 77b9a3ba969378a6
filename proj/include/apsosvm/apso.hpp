#pragma once

// Particle swarm optimizers over box-bounded continuous domains.
//
// Four update rules share one driver:
//   pso_standard      v' = v + a*e1*(g - x) + b*e2*(p - x),   x' = x + v'
//   pso_inertia       v' = theta*v + a*e1*(g - x) + b*e2*(p - x)
//   apso_velocity     v' = v + a*L*n + b*(g - x),              x' = x + v'
//   apso_single_step  x' = (1 - b)*x + b*g + a*L*n
// where g is the global best, p the particle's own best, e1/e2 are uniform
// [0,1] per entry, n is standard normal per entry, L = upper - lower per
// dimension and a = alpha_at(cfg, t). Positions are clamped to the box.
//
// All random draws happen on the calling thread in particle order, so the
// serial and OpenMP evaluation paths produce identical trajectories.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "apsosvm/kvconfig.hpp"
#include "apsosvm/report.hpp"

namespace apsosvm {

/// Black-box minimization problem over a box.
struct ObjectiveSpec {
  std::vector<double> lower_bounds;
  std::vector<double> upper_bounds;
  /// Must be pure: parallel evaluation calls it concurrently.
  std::function<double(std::span<const double>)> evaluate;

  std::size_t dimension() const { return lower_bounds.size(); }
  void validate() const;
};

enum class Variant { pso_standard, pso_inertia, apso_velocity, apso_single_step };
enum class AlphaSchedule { exponential_decay, geometric_decay, constant };
enum class ExecPolicy { serial, parallel };

std::string to_string(Variant v);
std::string to_string(AlphaSchedule s);
Variant parse_variant(const std::string& name);
AlphaSchedule parse_schedule(const std::string& name);

struct SwarmConfig {
  std::size_t n_particles = 25;
  std::size_t max_iterations = 100;
  double alpha0 = 0.5;
  double beta = 0.5;
  double gamma = 0.7;
  double theta = 0.7;
  Variant variant = Variant::apso_single_step;
  AlphaSchedule schedule = AlphaSchedule::geometric_decay;
  std::uint64_t seed = 0;

  void validate() const;

  /// Keys: variant, n_particles, max_iterations, alpha0, beta, gamma, theta, schedule, seed.
  static SwarmConfig from_config(const KeyValueConfig& kv, const SwarmConfig& defaults);
  static SwarmConfig from_config(const KeyValueConfig& kv);
  KeyValueConfig to_config() const;
};

/// Randomness scale at iteration t.
double alpha_at(const SwarmConfig& cfg, std::size_t t);

struct SwarmState {
  std::size_t n_particles = 0;
  std::size_t dimension = 0;
  std::vector<double> positions;   // row-major n_particles x dimension
  std::vector<double> velocities;  // empty for apso_single_step
  std::vector<double> fitness;     // fitness at current positions
  std::vector<double> personal_best_positions;  // pso variants only
  std::vector<double> personal_best_fitness;
  std::vector<double> global_best_position;
  double global_best_fitness = 0.0;
  std::size_t iteration = 0;
  std::size_t evaluations = 0;
  std::size_t rejected_moves = 0;
  std::mt19937_64 rng;

  std::span<const double> position(std::size_t i) const {
    return {positions.data() + i * dimension, dimension};
  }
  bool has_velocity() const { return !velocities.empty(); }
  bool has_personal_best() const { return !personal_best_fitness.empty(); }
};

/// One objective call: the position that was evaluated and its raw value
/// (possibly non-finite, in which case the move is rejected afterwards).
struct EvaluationRecord {
  std::size_t iteration;
  std::size_t particle;
  std::span<const double> position;
  double fitness;
};

struct RunOptions {
  ExecPolicy policy = ExecPolicy::serial;
  /// 0 = no limit. Otherwise the run stops after exactly this many
  /// evaluations (the last iteration may move only a prefix of the swarm).
  std::size_t evaluation_limit = 0;
  /// Replace the first rows of the uniformly sampled initial swarm.
  std::vector<std::vector<double>> initial_positions;
  /// Invoked on the calling thread, in particle order, after each evaluation.
  std::function<void(const EvaluationRecord&)> observer;
};

/// Evaluates every row of `positions` into `fitness` one after another.
void evaluate_swarm_serial(const ObjectiveSpec& spec, std::span<const double> positions,
                           std::size_t count, std::span<double> fitness);
/// Same contract as evaluate_swarm_serial, fanned out with OpenMP.
void evaluate_swarm_parallel(const ObjectiveSpec& spec, std::span<const double> positions,
                             std::size_t count, std::span<double> fitness);

SwarmState init_swarm(const ObjectiveSpec& spec, const SwarmConfig& cfg,
                      const RunOptions& options = {});

/// One synchronous swarm update. Returns false when the evaluation limit
/// left no budget for this step (state untouched).
bool step(SwarmState& state, const ObjectiveSpec& spec, const SwarmConfig& cfg,
          const RunOptions& options = {});

RunReport optimize(const ObjectiveSpec& spec, const SwarmConfig& cfg,
                   const RunOptions& options = {});

}  // namespace apsosvm
