#pragma once

// Resource-constrained project scheduling: PSPLIB ingestion, a feasibility
// checker, a serial schedule generation decoder and a swarm search over
// activity priorities.
//
// Time is discrete. An activity with duration d finishing at F occupies
// periods F-d+1 .. F, i.e. it starts at S = F - d.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "apsosvm/apso.hpp"
#include "apsosvm/report.hpp"

namespace apsosvm {

struct Mode {
  int duration = 0;
  std::vector<int> renewable;     // per renewable resource
  std::vector<int> nonrenewable;  // per non-renewable resource
};

struct Activity {
  std::vector<Mode> modes;
  std::vector<std::size_t> successors;
  std::vector<std::size_t> predecessors;  // filled by finalize()
};

/// Activity 0 is the dummy source, the last one the dummy sink.
struct ProjectInstance {
  std::string name;
  std::vector<Activity> activities;
  std::vector<int> renewable_capacity;
  std::vector<int> nonrenewable_capacity;
  int horizon = 0;
  // Time windows from the critical-path passes, using each activity's
  // shortest mode.
  std::vector<int> earliest_finish;
  std::vector<int> latest_finish;

  std::size_t size() const { return activities.size(); }
  bool single_mode() const;
  /// Builds predecessor lists, checks the network and resource data, and
  /// computes the time windows. Throws DataError.
  void finalize();
  int critical_path_bound() const { return earliest_finish.back(); }
};

/// Reads the PSPLIB `.sm` layout (also `.mm` continuation rows for extra
/// modes). Errors carry the offending line number.
ProjectInstance parse_psplib(std::istream& in, const std::string& name = "");
ProjectInstance parse_psplib(const std::string& path);
/// Writes the same layout back; parse_psplib(write_psplib(x)) reproduces x.
void write_psplib(std::ostream& out, const ProjectInstance& inst);

/// `instance-name makespan` per line; `#` comments and blank lines skipped.
std::map<std::string, int> load_optimum_sidecar(const std::string& path);

struct Schedule {
  std::vector<std::size_t> mode;
  std::vector<int> finish;

  int makespan() const { return finish.empty() ? 0 : finish.back(); }
  int start(const ProjectInstance& inst, std::size_t j) const {
    return finish[j] - inst.activities[j].modes[mode[j]].duration;
  }
};

enum class ViolationKind { assignment, window, precedence, renewable, nonrenewable };
std::string to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::size_t activity = 0;
  std::size_t other = 0;  // predecessor for precedence violations
  int period = 0;         // renewable violations
  std::size_t resource = 0;
  std::string message;
};

struct FeasibilityReport {
  std::vector<Violation> violations;

  bool feasible() const { return violations.empty(); }
  bool has(ViolationKind kind) const;
};

FeasibilityReport check_feasible(const ProjectInstance& inst, const Schedule& s);

/// Serial schedule generation on a single-mode instance: repeatedly takes
/// the eligible activity with the highest priority (ties to the lower
/// index) and starts it at the earliest precedence- and resource-feasible
/// time.
Schedule decode_priorities(const ProjectInstance& inst, std::span<const double> priorities);

/// Latest-finish-time rule as priorities in [0, 1]: earlier deadlines rank higher.
std::vector<double> lft_priorities(const ProjectInstance& inst);

struct RcpspSolution {
  RunReport report;
  Schedule schedule;
};

/// Swarm search over priority vectors in [0, 1]^J. Fitness is the decoded
/// makespan; the run stops after `schedule_budget` decodes. The LFT
/// priorities seed the first particle. When `best_known` is given the
/// report carries (makespan - best_known) / best_known.
RcpspSolution solve(const ProjectInstance& inst, const SwarmConfig& cfg,
                    std::size_t schedule_budget, std::optional<int> best_known = std::nullopt,
                    ExecPolicy policy = ExecPolicy::serial);

/// Swarm settings used for the deviation table.
SwarmConfig scheduling_swarm(std::uint64_t seed);

struct DeviationTableRow {
  std::size_t budget = 0;
  double mean_deviation_percent = 0.0;
  std::size_t seeds = 0;
  std::size_t instances = 0;
  std::vector<double> deviations;  // fraction, instance-major then seed
};

/// Mean deviation over every (instance, seed) pair for one schedule budget,
/// with seeds first_seed .. first_seed + seeds - 1 applied to `swarm`.
/// Instances without an entry in `optima` are rejected.
DeviationTableRow deviation_table_row(const std::vector<ProjectInstance>& instances,
                                      const std::map<std::string, int>& optima,
                                      std::size_t budget, std::size_t seeds,
                                      ExecPolicy policy = ExecPolicy::serial,
                                      std::uint64_t first_seed = 0,
                                      const SwarmConfig& swarm = scheduling_swarm(0));

/// Every `.sm` file in `dir`, sorted by name.
std::vector<ProjectInstance> load_instance_dir(const std::string& dir);

Record to_record(const DeviationTableRow& row);

struct GeneratorParams {
  std::size_t jobs = 30;  // without the two dummies
  std::size_t resources = 4;
  int max_duration = 10;
  int max_demand = 10;
  double resource_factor = 0.5;    // chance a job uses a given resource
  double resource_strength = 0.5;  // 0 = tightest, 1 = no conflicts
  std::size_t max_successors = 3;
};

/// Random single-mode instance in the style of the j30 set.
ProjectInstance generate_instance(const GeneratorParams& params, std::uint64_t seed,
                                  const std::string& name = "");

}  // namespace apsosvm
