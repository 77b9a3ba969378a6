#include "apsosvm/rcpsp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "apsosvm/errors.hpp"

namespace apsosvm {

namespace {

[[noreturn]] void fail_at(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

std::vector<long> ints_of(const std::string& text, std::size_t line) {
  std::istringstream in(text);
  std::vector<long> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(tok, &used);
    } catch (const std::exception&) {
      fail_at(line, "expected an integer, got '" + tok + "'");
    }
    if (used != tok.size()) fail_at(line, "expected an integer, got '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

bool starts_with(const std::string& s, std::string_view prefix) {
  return s.compare(0, prefix.size(), prefix) == 0;
}

std::string after_colon(const std::string& s) {
  const auto c = s.find(':');
  return c == std::string::npos ? std::string() : s.substr(c + 1);
}

// First integer after the colon of a `key : value` header line.
int header_value(const std::string& s, std::size_t line) {
  std::istringstream in(after_colon(s));
  int v = 0;
  if (!(in >> v)) fail_at(line, "missing value in '" + s + "'");
  return v;
}

bool is_rule(const std::string& s) {
  return !s.empty() && (s.front() == '*' || s.front() == '-');
}

}  // namespace

bool ProjectInstance::single_mode() const {
  return std::all_of(activities.begin(), activities.end(),
                     [](const Activity& a) { return a.modes.size() == 1; });
}

void ProjectInstance::finalize() {
  const std::size_t n = activities.size();
  if (n < 2) throw DataError("a project needs a source and a sink");
  for (auto& a : activities) a.predecessors.clear();
  for (std::size_t j = 0; j < n; ++j) {
    const auto& a = activities[j];
    if (a.modes.empty()) throw DataError("activity " + std::to_string(j + 1) + " has no modes");
    for (const auto& m : a.modes) {
      if (m.duration < 0) throw DataError("negative duration for activity " + std::to_string(j + 1));
      if (m.renewable.size() != renewable_capacity.size() ||
          m.nonrenewable.size() != nonrenewable_capacity.size())
        throw DataError("demand count mismatch for activity " + std::to_string(j + 1));
      for (std::size_t r = 0; r < m.renewable.size(); ++r) {
        if (m.renewable[r] < 0) throw DataError("negative demand");
        if (m.renewable[r] > renewable_capacity[r])
          throw DataError("activity " + std::to_string(j + 1) + " exceeds the capacity of R" +
                          std::to_string(r + 1));
      }
      for (int v : m.nonrenewable) {
        if (v < 0) throw DataError("negative demand");
      }
    }
    for (auto s : a.successors) {
      if (s >= n || s == j) throw DataError("bad successor of activity " + std::to_string(j + 1));
      activities[s].predecessors.push_back(j);
    }
  }
  for (int c : renewable_capacity) {
    if (c < 0) throw DataError("negative capacity");
  }
  for (int c : nonrenewable_capacity) {
    if (c < 0) throw DataError("negative capacity");
  }
  if (!activities.front().predecessors.empty()) throw DataError("the source has predecessors");
  if (!activities.back().successors.empty()) throw DataError("the sink has successors");

  // Kahn order doubles as the cycle check.
  std::vector<std::size_t> indeg(n), order;
  for (std::size_t j = 0; j < n; ++j) indeg[j] = activities[j].predecessors.size();
  for (std::size_t j = 0; j < n; ++j) {
    if (indeg[j] == 0) order.push_back(j);
  }
  for (std::size_t k = 0; k < order.size(); ++k) {
    for (auto s : activities[order[k]].successors) {
      if (--indeg[s] == 0) order.push_back(s);
    }
  }
  if (order.size() != n) throw DataError("precedence graph has a cycle");

  const auto shortest = [&](std::size_t j) {
    int d = activities[j].modes.front().duration;
    for (const auto& m : activities[j].modes) d = std::min(d, m.duration);
    return d;
  };
  earliest_finish.assign(n, 0);
  for (auto j : order) {
    int es = 0;
    for (auto p : activities[j].predecessors) es = std::max(es, earliest_finish[p]);
    earliest_finish[j] = es + shortest(j);
  }
  if (horizon < critical_path_bound())
    throw DataError("horizon " + std::to_string(horizon) + " is shorter than the critical path " +
                    std::to_string(critical_path_bound()));
  latest_finish.assign(n, horizon);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int lf = horizon;
    for (auto s : activities[*it].successors) lf = std::min(lf, latest_finish[s] - shortest(s));
    latest_finish[*it] = lf;
  }
}

ProjectInstance parse_psplib(std::istream& in, const std::string& name) {
  std::vector<std::string> lines;
  for (std::string s; std::getline(in, s);) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    lines.push_back(std::move(s));
  }

  ProjectInstance inst;
  inst.name = name;
  long jobs = -1, horizon = -1, n_ren = -1, n_non = -1, n_doubly = 0;
  bool saw_prec = false, saw_req = false, saw_avail = false;

  std::size_t i = 0;
  const auto next_data_line = [&](const char* section) -> std::size_t {
    while (i < lines.size() && lines[i].find_first_not_of(" \t") == std::string::npos) ++i;
    if (i >= lines.size()) fail_at(lines.size(), std::string("unexpected end of file in ") + section);
    return i++;
  };

  for (; i < lines.size(); ++i) {
    const auto& s = lines[i];
    const auto lineno = i + 1;
    if (starts_with(s, "jobs (incl. supersource/sink")) {
      jobs = header_value(s, lineno);
    } else if (starts_with(s, "horizon")) {
      horizon = header_value(s, lineno);
    } else if (starts_with(s, "  - renewable")) {
      n_ren = header_value(s, lineno);
    } else if (starts_with(s, "  - nonrenewable")) {
      n_non = header_value(s, lineno);
    } else if (starts_with(s, "  - doubly constrained")) {
      n_doubly = header_value(s, lineno);
    } else if (s == "PRECEDENCE RELATIONS:") {
      if (jobs < 2) fail_at(lineno, "job count must precede PRECEDENCE RELATIONS:");
      saw_prec = true;
      i += 2;  // past the section name and the column header
      inst.activities.assign(static_cast<std::size_t>(jobs), {});
      for (long k = 0; k < jobs; ++k) {
        const auto at = next_data_line("PRECEDENCE RELATIONS:");
        if (is_rule(lines[at])) fail_at(at + 1, "expected " + std::to_string(jobs) + " precedence rows");
        const auto v = ints_of(lines[at], at + 1);
        if (v.size() < 3) fail_at(at + 1, "precedence row needs job, modes and successor count");
        if (v[0] != k + 1) fail_at(at + 1, "expected job " + std::to_string(k + 1));
        if (v[1] < 1) fail_at(at + 1, "mode count must be positive");
        if (static_cast<long>(v.size()) != 3 + v[2]) fail_at(at + 1, "successor count does not match the row");
        auto& a = inst.activities[static_cast<std::size_t>(k)];
        a.modes.resize(static_cast<std::size_t>(v[1]));
        for (std::size_t t = 3; t < v.size(); ++t) {
          if (v[t] < 1 || v[t] > jobs) fail_at(at + 1, "successor out of range");
          a.successors.push_back(static_cast<std::size_t>(v[t] - 1));
        }
      }
      --i;
    } else if (s == "REQUESTS/DURATIONS:") {
      if (!saw_prec) fail_at(lineno, "REQUESTS/DURATIONS: before PRECEDENCE RELATIONS:");
      if (n_ren < 0 || n_non < 0) fail_at(lineno, "resource counts missing");
      saw_req = true;
      i += 3;  // section name, column header, rule
      const std::size_t width = static_cast<std::size_t>(n_ren + n_non + n_doubly);
      for (std::size_t k = 0; k < inst.activities.size(); ++k) {
        auto& a = inst.activities[k];
        for (std::size_t m = 0; m < a.modes.size(); ++m) {
          const auto at = next_data_line("REQUESTS/DURATIONS:");
          if (is_rule(lines[at])) fail_at(at + 1, "missing request rows");
          auto v = ints_of(lines[at], at + 1);
          if (m == 0) {
            if (v.empty() || v[0] != static_cast<long>(k + 1))
              fail_at(at + 1, "expected job " + std::to_string(k + 1));
            v.erase(v.begin());
          }
          if (v.size() != 2 + width) fail_at(at + 1, "wrong number of request columns");
          if (v[0] != static_cast<long>(m + 1)) fail_at(at + 1, "expected mode " + std::to_string(m + 1));
          auto& mode = a.modes[m];
          mode.duration = static_cast<int>(v[1]);
          for (long r = 0; r < n_ren; ++r) mode.renewable.push_back(static_cast<int>(v[2 + r]));
          for (long r = 0; r < n_non; ++r) mode.nonrenewable.push_back(static_cast<int>(v[2 + n_ren + r]));
        }
      }
      --i;
    } else if (s == "RESOURCEAVAILABILITIES:") {
      if (n_ren < 0 || n_non < 0) fail_at(lineno, "resource counts missing");
      saw_avail = true;
      i += 2;  // section name and resource names
      const auto at = next_data_line("RESOURCEAVAILABILITIES:");
      const auto v = ints_of(lines[at], at + 1);
      if (v.size() != static_cast<std::size_t>(n_ren + n_non + n_doubly))
        fail_at(at + 1, "wrong number of availabilities");
      for (long r = 0; r < n_ren; ++r) inst.renewable_capacity.push_back(static_cast<int>(v[r]));
      for (long r = 0; r < n_non; ++r) inst.nonrenewable_capacity.push_back(static_cast<int>(v[n_ren + r]));
      --i;
    }
  }
  const auto end = lines.size();
  if (jobs < 0) fail_at(end, "missing job count");
  if (horizon < 0) fail_at(end, "missing horizon");
  if (n_doubly != 0) fail_at(end, "doubly constrained resources are not supported");
  if (!saw_prec) fail_at(end, "missing PRECEDENCE RELATIONS:");
  if (!saw_req) fail_at(end, "missing REQUESTS/DURATIONS:");
  if (!saw_avail) fail_at(end, "missing RESOURCEAVAILABILITIES:");
  inst.horizon = static_cast<int>(horizon);
  inst.finalize();
  return inst;
}

ProjectInstance parse_psplib(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return parse_psplib(in, std::filesystem::path(path).stem().string());
}

void write_psplib(std::ostream& out, const ProjectInstance& inst) {
  const std::string rule(72, '*');
  const auto n_ren = inst.renewable_capacity.size(), n_non = inst.nonrenewable_capacity.size();
  out << rule << "\n"
      << "file with basedata            : " << inst.name << ".bas\n"
      << "initial value random generator: 0\n"
      << rule << "\n"
      << "projects                      :  1\n"
      << "jobs (incl. supersource/sink ):  " << inst.size() << "\n"
      << "horizon                       :  " << inst.horizon << "\n"
      << "RESOURCES\n"
      << "  - renewable                 :  " << n_ren << "   R\n"
      << "  - nonrenewable              :  " << n_non << "   N\n"
      << "  - doubly constrained        :  0   D\n"
      << rule << "\n"
      << "PROJECT INFORMATION:\n"
      << "pronr.  #jobs rel.date duedate tardcost  MPM-Time\n"
      << "    1     " << inst.size() - 2 << "      0       " << inst.critical_path_bound()
      << "        0       " << inst.critical_path_bound() << "\n"
      << rule << "\n"
      << "PRECEDENCE RELATIONS:\n"
      << "jobnr.    #modes  #successors   successors\n";
  for (std::size_t j = 0; j < inst.size(); ++j) {
    const auto& a = inst.activities[j];
    out << std::setw(4) << j + 1 << std::setw(9) << a.modes.size() << std::setw(11) << a.successors.size()
        << "      ";
    for (auto s : a.successors) out << std::setw(4) << s + 1;
    out << "\n";
  }
  out << rule << "\n"
      << "REQUESTS/DURATIONS:\n"
      << "jobnr. mode duration";
  for (std::size_t r = 0; r < n_ren; ++r) out << "  R " << r + 1;
  for (std::size_t r = 0; r < n_non; ++r) out << "  N " << r + 1;
  out << "\n" << std::string(72, '-') << "\n";
  for (std::size_t j = 0; j < inst.size(); ++j) {
    const auto& a = inst.activities[j];
    for (std::size_t m = 0; m < a.modes.size(); ++m) {
      if (m == 0) {
        out << std::setw(3) << j + 1;
      } else {
        out << "   ";
      }
      out << std::setw(7) << m + 1 << std::setw(6) << a.modes[m].duration << "    ";
      for (int v : a.modes[m].renewable) out << std::setw(5) << v;
      for (int v : a.modes[m].nonrenewable) out << std::setw(5) << v;
      out << "\n";
    }
  }
  out << rule << "\n"
      << "RESOURCEAVAILABILITIES:\n";
  for (std::size_t r = 0; r < n_ren; ++r) out << "  R " << r + 1;
  for (std::size_t r = 0; r < n_non; ++r) out << "  N " << r + 1;
  out << "\n";
  for (int c : inst.renewable_capacity) out << std::setw(5) << c;
  for (int c : inst.nonrenewable_capacity) out << std::setw(5) << c;
  out << "\n" << rule << "\n";
}

std::map<std::string, int> load_optimum_sidecar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::map<std::string, int> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    std::string name, extra;
    int makespan = 0;
    if (!(row >> name)) continue;
    if (!(row >> makespan) || (row >> extra) || makespan < 0)
      fail_at(lineno, "expected `instance-name makespan`");
    if (!out.emplace(name, makespan).second) fail_at(lineno, "duplicate instance " + name);
  }
  return out;
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::assignment: return "assignment";
    case ViolationKind::window: return "window";
    case ViolationKind::precedence: return "precedence";
    case ViolationKind::renewable: return "renewable";
    case ViolationKind::nonrenewable: return "nonrenewable";
  }
  return "unknown";
}

bool FeasibilityReport::has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.kind == kind; });
}

FeasibilityReport check_feasible(const ProjectInstance& inst, const Schedule& s) {
  FeasibilityReport rep;
  const std::size_t n = inst.size();
  const auto add = [&](ViolationKind kind, std::size_t j, std::string msg) {
    Violation v;
    v.kind = kind;
    v.activity = j;
    v.message = std::move(msg);
    rep.violations.push_back(std::move(v));
    return &rep.violations.back();
  };
  const auto act = [](std::size_t j) { return "activity " + std::to_string(j + 1); };

  if (s.mode.size() != n || s.finish.size() != n) {
    add(ViolationKind::assignment, 0, "schedule covers " + std::to_string(s.finish.size()) + " of " +
                                          std::to_string(n) + " activities");
    return rep;
  }
  bool assigned = true;
  for (std::size_t j = 0; j < n; ++j) {
    if (s.mode[j] >= inst.activities[j].modes.size()) {
      add(ViolationKind::assignment, j, act(j) + " has no mode " + std::to_string(s.mode[j] + 1));
      assigned = false;
    }
  }
  if (!assigned) return rep;

  for (std::size_t j = 0; j < n; ++j) {
    const int d = inst.activities[j].modes[s.mode[j]].duration;
    const int lo = inst.earliest_finish.empty() ? d : inst.earliest_finish[j];
    const int hi = inst.latest_finish.empty() ? inst.horizon : inst.latest_finish[j];
    if (s.finish[j] - d < 0 || s.finish[j] < lo || s.finish[j] > hi)
      add(ViolationKind::window, j,
          act(j) + " finishes at " + std::to_string(s.finish[j]) + " outside [" + std::to_string(lo) +
              ", " + std::to_string(hi) + "]");
  }
  for (std::size_t j = 0; j < n; ++j) {
    const int start = s.start(inst, j);
    for (auto p : inst.activities[j].predecessors) {
      if (s.finish[p] > start) {
        auto* v = add(ViolationKind::precedence, j,
                      act(p) + " finishes at " + std::to_string(s.finish[p]) + " after " + act(j) +
                          " starts at " + std::to_string(start));
        v->other = p;
      }
    }
  }

  int last = 0;
  for (std::size_t j = 0; j < n; ++j) last = std::max(last, s.finish[j]);
  for (std::size_t r = 0; r < inst.renewable_capacity.size(); ++r) {
    std::vector<int> use(static_cast<std::size_t>(last) + 1, 0);
    for (std::size_t j = 0; j < n; ++j) {
      const auto& m = inst.activities[j].modes[s.mode[j]];
      for (int t = std::max(1, s.finish[j] - m.duration + 1); t <= s.finish[j]; ++t)
        use[static_cast<std::size_t>(t)] += m.renewable[r];
    }
    for (int t = 1; t <= last; ++t) {
      if (use[static_cast<std::size_t>(t)] > inst.renewable_capacity[r]) {
        // Name the activity active in period t that pushed usage over capacity.
        int run = 0;
        std::size_t culprit = 0;
        for (std::size_t j = 0; j < n; ++j) {
          const auto& m = inst.activities[j].modes[s.mode[j]];
          if (m.renewable[r] > 0 && s.finish[j] - m.duration < t && t <= s.finish[j]) {
            run += m.renewable[r];
            culprit = j;
            if (run > inst.renewable_capacity[r]) break;
          }
        }
        auto* v = add(ViolationKind::renewable, culprit,
                      "R" + std::to_string(r + 1) + " uses " +
                          std::to_string(use[static_cast<std::size_t>(t)]) + " of " +
                          std::to_string(inst.renewable_capacity[r]) + " in period " +
                          std::to_string(t) + " (" + act(culprit) + ")");
        v->period = t;
        v->resource = r;
      }
    }
  }
  for (std::size_t r = 0; r < inst.nonrenewable_capacity.size(); ++r) {
    long total = 0;
    std::size_t culprit = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const int k = inst.activities[j].modes[s.mode[j]].nonrenewable[r];
      total += k;
      if (k > 0) culprit = j;
    }
    if (total > inst.nonrenewable_capacity[r]) {
      auto* v = add(ViolationKind::nonrenewable, culprit,
                    "N" + std::to_string(r + 1) + " total " + std::to_string(total) + " exceeds " +
                        std::to_string(inst.nonrenewable_capacity[r]));
      v->resource = r;
    }
  }
  return rep;
}

Schedule decode_priorities(const ProjectInstance& inst, std::span<const double> priorities) {
  const std::size_t n = inst.size();
  if (priorities.size() != n)
    throw ConfigError("expected " + std::to_string(n) + " priorities, got " +
                      std::to_string(priorities.size()));
  if (!inst.single_mode()) throw ConfigError("the decoder handles single-mode instances only");
  for (double p : priorities) {
    if (!std::isfinite(p)) throw ConfigError("priorities must be finite");
  }
  const std::size_t n_res = inst.renewable_capacity.size();

  Schedule s;
  s.mode.assign(n, 0);
  s.finish.assign(n, 0);
  std::vector<char> done(n, 0);
  std::vector<std::size_t> waiting(n);
  for (std::size_t j = 0; j < n; ++j) waiting[j] = inst.activities[j].predecessors.size();
  // usage[t * n_res + r]: units of r busy during slot t, i.e. period t + 1.
  std::vector<int> usage;
  const auto ensure = [&](int slots) {
    const auto need = static_cast<std::size_t>(slots) * n_res;
    if (usage.size() < need) usage.resize(need, 0);
  };

  for (std::size_t placed = 0; placed < n; ++placed) {
    std::size_t pick = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (!done[j] && waiting[j] == 0 && (pick == n || priorities[j] > priorities[pick])) pick = j;
    }
    const auto& m = inst.activities[pick].modes.front();
    int start = 0;
    for (auto p : inst.activities[pick].predecessors) start = std::max(start, s.finish[p]);
    if (m.duration > 0) {
      for (;; ++start) {
        ensure(start + m.duration);
        bool fits = true;
        for (int t = start; t < start + m.duration && fits; ++t) {
          for (std::size_t r = 0; r < n_res; ++r) {
            if (usage[static_cast<std::size_t>(t) * n_res + r] + m.renewable[r] > inst.renewable_capacity[r]) {
              fits = false;
              start = t;  // the loop increment moves past the clash
              break;
            }
          }
        }
        if (fits) break;
      }
      for (int t = start; t < start + m.duration; ++t) {
        for (std::size_t r = 0; r < n_res; ++r) usage[static_cast<std::size_t>(t) * n_res + r] += m.renewable[r];
      }
    }
    s.finish[pick] = start + m.duration;
    done[pick] = 1;
    for (auto succ : inst.activities[pick].successors) --waiting[succ];
  }
  return s;
}

std::vector<double> lft_priorities(const ProjectInstance& inst) {
  std::vector<double> out(inst.size());
  const double h = std::max(1, inst.horizon);
  for (std::size_t j = 0; j < inst.size(); ++j) out[j] = 1.0 - inst.latest_finish[j] / h;
  return out;
}

RcpspSolution solve(const ProjectInstance& inst, const SwarmConfig& cfg,
                    std::size_t schedule_budget, std::optional<int> best_known, ExecPolicy policy) {
  if (schedule_budget == 0) throw ConfigError("schedule budget must be positive");
  if (best_known && *best_known <= 0) throw ConfigError("best-known makespan must be positive");
  const std::size_t n = inst.size();

  ObjectiveSpec spec;
  spec.lower_bounds.assign(n, 0.0);
  spec.upper_bounds.assign(n, 1.0);
  spec.evaluate = [&](std::span<const double> x) {
    return static_cast<double>(decode_priorities(inst, x).makespan());
  };

  // Enough iterations that the decode budget, not t_max, ends the run.
  SwarmConfig run_cfg = cfg;
  run_cfg.n_particles = std::min(cfg.n_particles, schedule_budget);
  run_cfg.max_iterations = (schedule_budget + run_cfg.n_particles - 1) / run_cfg.n_particles;
  RunOptions opts;
  opts.policy = policy;
  opts.evaluation_limit = schedule_budget;
  opts.initial_positions.push_back(lft_priorities(inst));
  
  RcpspSolution out;
  out.report = optimize(spec, run_cfg, opts);
  out.schedule = decode_priorities(inst, out.report.best_position);
  if (best_known) {
    out.report.deviation =
        static_cast<double>(out.schedule.makespan() - *best_known) / static_cast<double>(*best_known);
  }
  return out;
}

SwarmConfig scheduling_swarm(std::uint64_t seed) {
  SwarmConfig cfg;
  cfg.variant = Variant::apso_single_step;
  cfg.schedule = AlphaSchedule::geometric_decay;
  cfg.n_particles = 25;
  cfg.alpha0 = 0.3;
  cfg.beta = 0.3;
  cfg.gamma = 0.99;
  cfg.seed = seed;
  return cfg;
}

DeviationTableRow deviation_table_row(const std::vector<ProjectInstance>& instances,
                                      const std::map<std::string, int>& optima,
                                      std::size_t budget, std::size_t seeds, ExecPolicy policy,
                                      std::uint64_t first_seed, const SwarmConfig& swarm) {
  if (instances.empty() || seeds == 0) throw ConfigError("need at least one instance and one seed");
  std::vector<int> best(instances.size());
  for (std::size_t k = 0; k < instances.size(); ++k) {
    const auto it = optima.find(instances[k].name);
    if (it == optima.end()) throw DataError("no optimum listed for " + instances[k].name);
    best[k] = it->second;
  }
  DeviationTableRow row;
  row.budget = budget;
  row.seeds = seeds;
  row.instances = instances.size();
  row.deviations.assign(instances.size() * seeds, 0.0);
  const auto total = static_cast<long long>(row.deviations.size());
  const auto run = [&](long long idx) {
    const auto k = static_cast<std::size_t>(idx) / seeds;
    SwarmConfig cfg = swarm;
    cfg.seed = first_seed + static_cast<std::uint64_t>(static_cast<std::size_t>(idx) % seeds);
    row.deviations[static_cast<std::size_t>(idx)] =
        *solve(instances[k], cfg, budget, best[k]).report.deviation;
  };
  if (policy == ExecPolicy::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long long idx = 0; idx < total; ++idx) run(idx);
  } else {
    for (long long idx = 0; idx < total; ++idx) run(idx);
  }
  row.mean_deviation_percent = 100.0 *
                               std::accumulate(row.deviations.begin(), row.deviations.end(), 0.0) /
                               static_cast<double>(row.deviations.size());
  return row;
}

std::vector<ProjectInstance> load_instance_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".sm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no .sm files in " + dir);
  std::vector<ProjectInstance> out;
  for (const auto& f : files) out.push_back(parse_psplib(f.string()));
  return out;
}

Record to_record(const DeviationTableRow& row) {
  return {{"schedules", std::to_string(row.budget)},
          {"mean_deviation_percent", format_real(row.mean_deviation_percent)},
          {"seeds", std::to_string(row.seeds)},
          {"instances", std::to_string(row.instances)}};
}

ProjectInstance generate_instance(const GeneratorParams& params, std::uint64_t seed,
                                  const std::string& name) {
  if (params.jobs == 0 || params.max_duration < 1 || params.max_demand < 1 ||
      params.max_successors == 0)
    throw ConfigError("generator sizes must be positive");
  if (!(params.resource_factor > 0.0 && params.resource_factor <= 1.0) ||
      !(params.resource_strength >= 0.0 && params.resource_strength <= 1.0))
    throw ConfigError("resource factor in (0, 1] and strength in [0, 1] required");

  std::mt19937_64 gen(seed);
  const std::size_t J = params.jobs, n = J + 2, R = params.resources;
  std::uniform_int_distribution<int> duration(1, params.max_duration), demand(1, params.max_demand);
  std::bernoulli_distribution uses(params.resource_factor);

  ProjectInstance inst;
  inst.name = name.empty() ? "gen_" + std::to_string(seed) : name;
  inst.activities.resize(n);
  for (auto& a : inst.activities) {
    a.modes.resize(1);
    a.modes[0].renewable.assign(R, 0);
  }

  // Arcs only go from lower to higher index, so the network is acyclic.
  std::vector<char> has_pred(n, 0);
  for (std::size_t j = 1; j + 1 < n; ++j) {
    auto& a = inst.activities[j];
    a.modes[0].duration = duration(gen);
    bool any = false;
    for (std::size_t r = 0; r < R; ++r) {
      if (uses(gen)) {
        a.modes[0].renewable[r] = demand(gen);
        any = true;
      }
    }
    if (!any) a.modes[0].renewable[gen() % R] = demand(gen);

    const std::size_t later = n - 2 - j;  // non-dummy jobs after j
    if (later == 0) continue;
    const std::size_t want = std::min<std::size_t>(later, 1 + gen() % params.max_successors);
    const std::size_t window = std::min<std::size_t>(later, std::max<std::size_t>(want, J / 3));
    std::vector<std::size_t> pool(window);
    std::iota(pool.begin(), pool.end(), j + 1);
    std::shuffle(pool.begin(), pool.end(), gen);
    // Leave a few jobs without successors so the sink has several predecessors.
    if (gen() % 8 == 0) continue;
    for (std::size_t k = 0; k < want; ++k) {
      a.successors.push_back(pool[k]);
      has_pred[pool[k]] = 1;
    }
    std::sort(a.successors.begin(), a.successors.end());
  }
  for (std::size_t j = 1; j + 1 < n; ++j) {
    if (!has_pred[j]) inst.activities[0].successors.push_back(j);
    if (inst.activities[j].successors.empty()) inst.activities[j].successors.push_back(n - 1);
  }

  int total = 0;
  for (const auto& a : inst.activities) total += a.modes[0].duration;
  inst.horizon = total;

  // Capacity between the largest single demand and the peak of the
  // earliest-start profile.
  inst.renewable_capacity.assign(R, std::numeric_limits<int>::max() / 4);
  inst.finalize();
  for (std::size_t r = 0; r < R; ++r) {
    int kmin = 0;
    std::vector<int> profile(static_cast<std::size_t>(total) + 1, 0);
    for (std::size_t j = 0; j < n; ++j) {
      const auto& m = inst.activities[j].modes[0];
      kmin = std::max(kmin, m.renewable[r]);
      for (int t = inst.earliest_finish[j] - m.duration; t < inst.earliest_finish[j]; ++t)
        profile[static_cast<std::size_t>(t)] += m.renewable[r];
    }
    const int kmax = *std::max_element(profile.begin(), profile.end());
    inst.renewable_capacity[r] =
        kmin + static_cast<int>(std::lround(params.resource_strength * (kmax - kmin)));
  }
  inst.finalize();
  return inst;
}

}  // namespace apsosvm
