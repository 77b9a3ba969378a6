#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "apsosvm/errors.hpp"
#include "apsosvm/rcpsp.hpp"
#include "oracles/rcpsp_bnb.hpp"

using namespace apsosvm;

namespace {

const std::string kDir = APSOSVM_DATA_DIR "/rcpsp";

ProjectInstance fixture(const std::string& name) {
  return parse_psplib(kDir + "/fixtures/" + name + ".sm");
}

std::vector<ProjectInstance> shipped_instances() {
  std::vector<ProjectInstance> out;
  for (const auto& e : std::filesystem::directory_iterator(kDir)) {
    if (e.path().extension() == ".sm") out.push_back(parse_psplib(e.path().string()));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

std::vector<double> random_priorities(std::size_t n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(n);
  for (auto& x : p) x = u(gen);
  return p;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string parse_error(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_psplib(in, "bad");
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

std::string chain_text() {
  std::ifstream in(kDir + "/fixtures/chain3.sm");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  s.replace(at, from.size(), to);
  return s;
}

}  // namespace

TEST_CASE("parse the chain fixture") {
  const auto inst = fixture("chain3");
  CHECK(inst.name == "chain3");
  CHECK(inst.size() == 5);
  CHECK(inst.horizon == 9);
  CHECK(inst.single_mode());
  CHECK(inst.renewable_capacity == std::vector<int>{10});
  CHECK(inst.nonrenewable_capacity.empty());
  CHECK(inst.activities[2].predecessors == std::vector<std::size_t>{1});
  CHECK(inst.activities[3].successors == std::vector<std::size_t>{4});
  CHECK(inst.activities[3].modes[0].duration == 4);
  CHECK(inst.earliest_finish == std::vector<int>{0, 2, 5, 9, 9});
  CHECK(inst.latest_finish == std::vector<int>{0, 2, 5, 9, 9});
  CHECK(inst.critical_path_bound() == 9);
  for (std::size_t j = 0; j < inst.size(); ++j) {
    CHECK(inst.earliest_finish[j] <= inst.latest_finish[j]);
    CHECK(inst.latest_finish[j] <= inst.horizon);
  }
}

TEST_CASE("dummy-only project") {
  const auto inst = fixture("dummy");
  CHECK(inst.size() == 2);
  CHECK(inst.critical_path_bound() == 0);
  const std::vector<double> p{0.5, 0.5};
  CHECK(decode_priorities(inst, p).makespan() == 0);
}

TEST_CASE("parse errors name the line") {
  const auto base = chain_text();
  CHECK(parse_error(replace_once(base, "PRECEDENCE RELATIONS:", "PRECEDENCE:")) ==
        "line 25: REQUESTS/DURATIONS: before PRECEDENCE RELATIONS:");
  CHECK(parse_error(replace_once(base, "RESOURCEAVAILABILITIES:", "RESOURCES AVAILABLE:")).find("missing RESOURCEAVAILABILITIES:") !=
        std::string::npos);
  // Successor count 2 but one successor listed, on line 20.
  CHECK(parse_error(replace_once(base, "   2        1          1           3",
                                 "   2        1          2           3"))
            .rfind("line 20:", 0) == 0);
  // Non-numeric duration on line 30.
  CHECK(parse_error(replace_once(base, "  3      1     3       1", "  3      1     x       1"))
            .rfind("line 30:", 0) == 0);
  // Wrong job number.
  CHECK(parse_error(replace_once(base, "  4      1     4       1", "  7      1     4       1"))
            .rfind("line 31:", 0) == 0);
  // Too few availabilities.
  CHECK(parse_error(replace_once(base, "  10\n", "\n")).find("line") == 0);
  // A cycle 4 -> 2.
  CHECK(parse_error(replace_once(base, "   4        1          1           5",
                                 "   4        1          2           2   5"))
            .find("cycle") != std::string::npos);
  // Horizon shorter than the critical path.
  CHECK(parse_error(replace_once(base, "horizon                       :  9",
                                 "horizon                       :  8"))
            .find("horizon") != std::string::npos);
  CHECK(parse_error("").find("missing job count") != std::string::npos);
  CHECK_THROWS_AS(parse_psplib("/nonexistent.sm"), DataError);
}

TEST_CASE("write and parse round trip") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GeneratorParams gp;
    gp.jobs = 5 + seed * 3;
    const auto inst = generate_instance(gp, seed, "rt" + std::to_string(seed));
    std::stringstream ss;
    write_psplib(ss, inst);
    const auto back = parse_psplib(ss, inst.name);
    REQUIRE(back.size() == inst.size());
    CHECK(back.horizon == inst.horizon);
    CHECK(back.renewable_capacity == inst.renewable_capacity);
    CHECK(back.earliest_finish == inst.earliest_finish);
    CHECK(back.latest_finish == inst.latest_finish);
    for (std::size_t j = 0; j < inst.size(); ++j) {
      CHECK(back.activities[j].successors == inst.activities[j].successors);
      CHECK(back.activities[j].modes[0].duration == inst.activities[j].modes[0].duration);
      CHECK(back.activities[j].modes[0].renewable == inst.activities[j].modes[0].renewable);
    }
  }
}

TEST_CASE("feasibility checker") {
  const auto chain = fixture("chain3");
  Schedule ok{{0, 0, 0, 0, 0}, {0, 2, 5, 9, 9}};
  CHECK(check_feasible(chain, ok).feasible());

  Schedule early = ok;
  early.finish[3] = 6;  // starts at 2, before activity 3 finishes
  early.finish[4] = 6;
  const auto rep = check_feasible(chain, early);
  REQUIRE(rep.has(ViolationKind::precedence));
  const auto& v = rep.violations.front();
  CHECK(v.kind == ViolationKind::window);
  bool named = false;
  for (const auto& x : rep.violations) {
    if (x.kind == ViolationKind::precedence && x.activity == 3 && x.other == 2) {
      named = true;
      CHECK(x.message.find("activity 3") != std::string::npos);
      CHECK(x.message.find("activity 4") != std::string::npos);
    }
  }
  CHECK(named);

  const auto overlap = fixture("overlap2");
  Schedule both{{0, 0, 0, 0}, {0, 1, 1, 1}};
  const auto rr = check_feasible(overlap, both);
  REQUIRE(rr.has(ViolationKind::renewable));
  for (const auto& x : rr.violations) {
    if (x.kind == ViolationKind::renewable) {
      CHECK(x.period == 1);
      CHECK(x.resource == 0);
      CHECK(x.activity == 2);
    }
  }
  Schedule apart{{0, 0, 0, 0}, {0, 1, 2, 2}};
  CHECK(check_feasible(overlap, apart).feasible());

  Schedule bad_mode = ok;
  bad_mode.mode[2] = 3;
  CHECK(check_feasible(chain, bad_mode).has(ViolationKind::assignment));
  Schedule short_one{{0, 0}, {0, 2}};
  CHECK(check_feasible(chain, short_one).has(ViolationKind::assignment));
  Schedule late = ok;
  late.finish[4] = 10;
  CHECK(check_feasible(chain, late).has(ViolationKind::window));
}

TEST_CASE("non-renewable budget") {
  ProjectInstance inst;
  inst.renewable_capacity = {1};
  inst.nonrenewable_capacity = {3};
  inst.horizon = 2;
  inst.activities.resize(3);
  inst.activities[0].modes = {{0, {0}, {0}}};
  inst.activities[0].successors = {1};
  inst.activities[1].modes = {{1, {1}, {5}}, {2, {1}, {2}}};
  inst.activities[1].successors = {2};
  inst.activities[2].modes = {{0, {0}, {0}}};
  inst.finalize();
  CHECK_FALSE(inst.single_mode());
  CHECK(inst.earliest_finish[1] == 1);

  const auto rep = check_feasible(inst, {{0, 0, 0}, {0, 1, 1}});
  REQUIRE(rep.has(ViolationKind::nonrenewable));
  CHECK(rep.violations.front().activity == 1);
  CHECK(check_feasible(inst, {{0, 1, 0}, {0, 2, 2}}).feasible());
  const std::vector<double> p{1, 1, 1};
  CHECK_THROWS_AS(decode_priorities(inst, p), ConfigError);
}

TEST_CASE("decoder on fixtures") {
  std::mt19937_64 gen(1);
  const auto chain = fixture("chain3");
  const auto overlap = fixture("overlap2");
  const auto parallel = fixture("parallel3");
  CHECK(parallel.critical_path_bound() == 5);
  for (int k = 0; k < 50; ++k) {
    CHECK(decode_priorities(chain, random_priorities(5, gen)).makespan() == 9);
    CHECK(decode_priorities(overlap, random_priorities(4, gen)).makespan() == 2);
    CHECK(decode_priorities(parallel, random_priorities(5, gen)).makespan() == 5);
  }
  // Equal priorities: the lower index goes first.
  const std::vector<double> flat(4, 0.5);
  const auto s = decode_priorities(overlap, flat);
  CHECK(s.finish[1] == 1);
  CHECK(s.finish[2] == 2);
  const std::vector<double> favour_second{0.5, 0.1, 0.9, 0.5};
  CHECK(decode_priorities(overlap, favour_second).finish[2] == 1);

  CHECK_THROWS_AS(decode_priorities(chain, flat), ConfigError);
  std::vector<double> nan(5, 0.5);
  nan[2] = std::nan("");
  CHECK_THROWS_AS(decode_priorities(chain, nan), ConfigError);
}

TEST_CASE("order-preserving priority changes give the same schedule") {
  std::mt19937_64 gen(2);
  GeneratorParams gp;
  const auto inst = generate_instance(gp, 77);
  for (int k = 0; k < 30; ++k) {
    const auto p = random_priorities(inst.size(), gen);
    std::vector<double> q(p.size()), r(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
      q[j] = std::pow(p[j], 3.0) * 0.5 + 0.1;
      r[j] = std::exp(p[j]);
    }
    const auto a = decode_priorities(inst, p);
    CHECK(decode_priorities(inst, q).finish == a.finish);
    CHECK(decode_priorities(inst, r).finish == a.finish);
  }
}

TEST_CASE("decoded schedules are feasible and above the critical path") {
  std::vector<ProjectInstance> all;
  for (const auto* name : {"chain3", "dummy", "overlap2", "parallel3"}) all.push_back(fixture(name));
  const auto shipped = shipped_instances();
  REQUIRE(shipped.size() == 5);
  all.insert(all.end(), shipped.begin(), shipped.end());
  for (std::uint64_t seed = 0; seed < 10; ++seed) all.push_back(generate_instance({}, 1000 + seed));

  std::mt19937_64 gen(3);
  for (const auto& inst : all) {
    for (int k = 0; k < 200; ++k) {
      const auto s = decode_priorities(inst, random_priorities(inst.size(), gen));
      const auto rep = check_feasible(inst, s);
      CHECK_MESSAGE(rep.feasible(), inst.name << ": " << (rep.feasible() ? "" : rep.violations.front().message));
      CHECK(s.makespan() >= inst.critical_path_bound());
    }
  }
}

TEST_CASE("exact oracle agrees with exhaustive list search") {
  GeneratorParams gp;
  gp.jobs = 6;
  gp.resource_strength = 0.2;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto inst = generate_instance(gp, seed);
    const int brute = oracle::exhaustive_makespan(inst);
    const auto with_memo = oracle::solve_exact(inst, 10'000'000);
    const auto plain = oracle::solve_exact(inst, 10'000'000, false);
    REQUIRE(with_memo.proven);
    REQUIRE(plain.proven);
    CHECK(with_memo.makespan == brute);
    CHECK(plain.makespan == brute);
    Schedule s{std::vector<std::size_t>(inst.size(), 0), with_memo.finish};
    CHECK(check_feasible(inst, s).feasible());
  }
  gp.jobs = 12;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = generate_instance(gp, 100 + seed);
    const auto with_memo = oracle::solve_exact(inst, 50'000'000);
    const auto plain = oracle::solve_exact(inst, 50'000'000, false);
    REQUIRE(with_memo.proven);
    REQUIRE(plain.proven);
    CHECK(with_memo.makespan == plain.makespan);
  }
}

TEST_CASE("shipped optima") {
  const auto optima = load_optimum_sidecar(kDir + "/optima.txt");
  for (const auto& inst : shipped_instances()) {
    REQUIRE(optima.count(inst.name) == 1);
    const int opt = optima.at(inst.name);
    CHECK(opt >= inst.critical_path_bound());
    // The optimum is attainable ...
    const auto exact = oracle::solve_exact(inst, 200'000'000);
    REQUIRE(exact.proven);
    CHECK(exact.makespan == opt);
    Schedule s{std::vector<std::size_t>(inst.size(), 0), exact.finish};
    CHECK(check_feasible(inst, s).feasible());
    // ... and nothing shorter exists.
    CHECK_FALSE(oracle::RcpspBnb(inst, 200'000'000).run(opt - 1).finish.size() > 0);
  }
}

TEST_CASE("optimum sidecar") {
  const auto path = std::filesystem::temp_directory_path() / "apsosvm_sidecar.txt";
  {
    std::ofstream out(path);
    out << "# name makespan\nj301_1 43\n\nj301_2   47  # trailing comment\n";
  }
  const auto m = load_optimum_sidecar(path.string());
  CHECK(m.size() == 2);
  CHECK(m.at("j301_1") == 43);
  CHECK(m.at("j301_2") == 47);
  {
    std::ofstream out(path);
    out << "j301_1 43\nj301_1 44\n";
  }
  CHECK_THROWS_AS(load_optimum_sidecar(path.string()), DataError);
  {
    std::ofstream out(path);
    out << "j301_1\n";
  }
  CHECK_THROWS_AS(load_optimum_sidecar(path.string()), DataError);
  std::filesystem::remove(path);
}

TEST_CASE("solve") {
  const auto chain = fixture("chain3");
  for (std::size_t budget : {1u, 10u, 100u}) {
    const auto sol = solve(chain, scheduling_swarm(4), budget, 9);
    CHECK(*sol.report.deviation == 0.0);
    CHECK(sol.report.evaluations == budget);
    CHECK(check_feasible(chain, sol.schedule).feasible());
  }
  const auto inst = shipped_instances().front();
  const auto a = solve(inst, scheduling_swarm(5), 600);
  const auto b = solve(inst, scheduling_swarm(5), 600);
  CHECK(a.report.evaluations == 600);
  CHECK(a.schedule.finish == b.schedule.finish);
  CHECK(a.report.best_fitness == a.schedule.makespan());
  CHECK(check_feasible(inst, a.schedule).feasible());
  CHECK_FALSE(a.report.deviation.has_value());
  CHECK_THROWS_AS(solve(chain, scheduling_swarm(0), 0), ConfigError);
}

TEST_CASE("larger budgets do not hurt") {
  const auto instances = shipped_instances();
  const auto optima = load_optimum_sidecar(kDir + "/optima.txt");
  const auto r1000 = deviation_table_row(instances, optima, 1000, 20);
  const auto r5000 = deviation_table_row(instances, optima, 5000, 20);
  CHECK(median(r5000.deviations) <= median(r1000.deviations));
  CHECK(r5000.mean_deviation_percent <= r1000.mean_deviation_percent);
  for (double d : r5000.deviations) CHECK(d >= 0.0);
  const auto rec = to_record(r5000);
  CHECK(rec.front().first == "schedules");
}

TEST_CASE("deviation table plumbing") {
  const auto instances = shipped_instances();
  const auto optima = load_optimum_sidecar(kDir + "/optima.txt");
  const auto a = deviation_table_row(instances, optima, 200, 3, ExecPolicy::serial);
  const auto b = deviation_table_row(instances, optima, 200, 3, ExecPolicy::parallel);
  CHECK(a.deviations == b.deviations);
  CHECK(a.deviations.size() == 15);
  CHECK_THROWS_AS(deviation_table_row(instances, {}, 200, 3), DataError);
}
