#include <cmath>
#include <limits>
#include <random>

#include "apsosvm/apso.hpp"
#include "apsosvm/errors.hpp"
#include "doctest.h"

using namespace apsosvm;

namespace {

double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

ObjectiveSpec sphere_spec(std::size_t dim, double half_width = 5.0) {
  return {std::vector<double>(dim, -half_width), std::vector<double>(dim, half_width), sphere};
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("init_swarm") {
  SUBCASE("single particle is the global best") {
    SwarmConfig cfg;
    cfg.n_particles = 1;
    const auto s = init_swarm(sphere_spec(3), cfg);
    CHECK(s.global_best_position == std::vector<double>(s.positions.begin(), s.positions.end()));
    CHECK(s.global_best_fitness == s.fitness[0]);
  }
  SUBCASE("same seed gives identical positions") {
    SwarmConfig cfg;
    cfg.seed = 99;
    CHECK(init_swarm(sphere_spec(4), cfg).positions == init_swarm(sphere_spec(4), cfg).positions);
    cfg.seed = 100;
    CHECK(init_swarm(sphere_spec(4), cfg).positions !=
          init_swarm(sphere_spec(4), SwarmConfig{}).positions);
  }
  SUBCASE("20 particles in [-5,5]^2 stay in bounds") {
    SwarmConfig cfg;
    cfg.n_particles = 20;
    const auto s = init_swarm(sphere_spec(2), cfg);
    REQUIRE(s.positions.size() == 40);
    for (double x : s.positions) CHECK((x >= -5.0 && x <= 5.0));
  }
  SUBCASE("velocities start at zero, single-step has none") {
    SwarmConfig cfg;
    CHECK_FALSE(init_swarm(sphere_spec(2), cfg).has_velocity());
    cfg.variant = Variant::apso_velocity;
    const auto s = init_swarm(sphere_spec(2), cfg);
    for (double v : s.velocities) CHECK(v == 0.0);
    cfg.variant = Variant::pso_standard;
    CHECK(init_swarm(sphere_spec(2), cfg).has_personal_best());
  }
  SUBCASE("configuration errors") {
    SwarmConfig cfg;
    CHECK_THROWS_AS(init_swarm({{1.0}, {1.0}, sphere}, cfg), ConfigError);
    CHECK_THROWS_AS(init_swarm({{0.0, 0.0}, {1.0}, sphere}, cfg), ConfigError);
    cfg.n_particles = 0;
    CHECK_THROWS_AS(init_swarm(sphere_spec(2), cfg), ConfigError);
    cfg = {};
    cfg.gamma = 1.0;
    CHECK_THROWS_AS(init_swarm(sphere_spec(2), cfg), ConfigError);
    cfg.schedule = AlphaSchedule::constant;
    CHECK_NOTHROW(init_swarm(sphere_spec(2), cfg));
  }
  SUBCASE("injected initial positions are used and clamped") {
    SwarmConfig cfg;
    RunOptions opt;
    opt.initial_positions = {{0.0, 0.0}, {9.0, -9.0}};
    const auto s = init_swarm(sphere_spec(2), cfg, opt);
    CHECK(s.position(0)[0] == 0.0);
    CHECK(s.position(1)[0] == 5.0);
    CHECK(s.position(1)[1] == -5.0);
    CHECK(s.global_best_fitness == 0.0);
  }
}

TEST_CASE("alpha_at") {
  SwarmConfig cfg;
  cfg.alpha0 = 1.0;
  cfg.gamma = 0.7;
  cfg.schedule = AlphaSchedule::geometric_decay;
  CHECK(alpha_at(cfg, 0) == 1.0);
  CHECK(alpha_at(cfg, 1) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(alpha_at(cfg, 2) == doctest::Approx(0.49).epsilon(1e-15));

  cfg.alpha0 = 0.3;
  for (auto sched : {AlphaSchedule::exponential_decay, AlphaSchedule::geometric_decay,
                     AlphaSchedule::constant}) {
    cfg.schedule = sched;
    CHECK(alpha_at(cfg, 0) == 0.3);
  }
  cfg.schedule = AlphaSchedule::exponential_decay;
  CHECK(alpha_at(cfg, 2) == doctest::Approx(0.3 * std::exp(-1.4)));
  for (auto sched : {AlphaSchedule::exponential_decay, AlphaSchedule::geometric_decay}) {
    cfg.schedule = sched;
    for (std::size_t t = 0; t < 50; ++t) CHECK(alpha_at(cfg, t + 1) < alpha_at(cfg, t));
  }
}

TEST_CASE("step degenerate cases") {
  SwarmConfig cfg;
  cfg.alpha0 = 0.0;
  cfg.n_particles = 8;
  const auto spec = sphere_spec(3);

  SUBCASE("beta = 1 puts every particle on g*") {
    cfg.beta = 1.0;
    auto s = init_swarm(spec, cfg);
    const auto g = s.global_best_position;
    step(s, spec, cfg);
    for (std::size_t i = 0; i < s.n_particles; ++i) {
      for (std::size_t k = 0; k < 3; ++k) CHECK(s.position(i)[k] == g[k]);
    }
  }
  SUBCASE("beta = 0 leaves positions unchanged") {
    cfg.beta = 0.0;
    auto s = init_swarm(spec, cfg);
    const auto before = s.positions;
    step(s, spec, cfg);
    CHECK(s.positions == before);
    CHECK(s.iteration == 1);
  }
}

TEST_CASE("non-finite fitness rejects the move") {
  // NaN everywhere except a small ball around the origin.
  ObjectiveSpec spec{{-1.0, -1.0}, {1.0, 1.0}, [](std::span<const double> x) {
                       const double f = sphere(x);
                       return f < 0.5 ? f : std::numeric_limits<double>::quiet_NaN();
                     }};
  SwarmConfig cfg;
  cfg.n_particles = 10;
  cfg.seed = 4;
  RunOptions opt;
  opt.initial_positions = {{0.1, 0.1}};
  auto s = init_swarm(spec, cfg, opt);
  for (int t = 0; t < 20; ++t) {
    const auto before = s.positions;
    step(s, spec, cfg, opt);
    for (std::size_t i = 0; i < s.n_particles; ++i) {
      if (!std::isfinite(spec.evaluate(s.position(i)))) {
        // Any particle sitting in the NaN region must never have moved there.
        CHECK(std::vector<double>(s.position(i).begin(), s.position(i).end()) ==
              std::vector<double>(before.begin() + i * 2, before.begin() + i * 2 + 2));
      }
    }
  }
  CHECK(s.rejected_moves > 0);
  CHECK(std::isfinite(s.global_best_fitness));
  CHECK(s.global_best_fitness < 0.5);
}

TEST_CASE("apso_velocity on 2D sphere, frozen reference seed") {
  SwarmConfig cfg;
  cfg.variant = Variant::apso_velocity;
  cfg.n_particles = 20;
  cfg.max_iterations = 100;
  cfg.seed = 39;
  const auto spec = sphere_spec(2);
  auto s = init_swarm(spec, cfg);
  for (std::size_t t = 0; t < 100; ++t) step(s, spec, cfg);
  CHECK(s.global_best_fitness < 1e-3);
}

TEST_CASE("optimize") {
  SUBCASE("flat landscape") {
    ObjectiveSpec spec{{-1.0, -1.0}, {1.0, 1.0}, [](std::span<const double>) { return 3.25; }};
    SwarmConfig cfg;
    cfg.max_iterations = 7;
    const auto r = optimize(spec, cfg);
    CHECK(r.best_fitness == 3.25);
    CHECK(r.evaluations == cfg.n_particles * 8);
  }
  SUBCASE("10D sphere with single-step APSO") {
    SwarmConfig cfg;
    cfg.n_particles = 40;
    cfg.max_iterations = 500;
    cfg.gamma = 0.9;
    cfg.seed = 1;
    const auto r = optimize(sphere_spec(10), cfg);
    CHECK(r.best_fitness < 1e-2);
    CHECK(r.evaluations == 40u * 501u);
  }
  SUBCASE("identical seeds give identical reports") {
    SwarmConfig cfg;
    cfg.variant = Variant::pso_inertia;
    cfg.seed = 17;
    const auto a = optimize(sphere_spec(5), cfg);
    const auto b = optimize(sphere_spec(5), cfg);
    CHECK(a.best_position == b.best_position);
    CHECK(a.best_fitness == b.best_fitness);
    CHECK(a.evaluations == b.evaluations);
    CHECK(a.seed == b.seed);
  }
  SUBCASE("evaluation limit is exact") {
    SwarmConfig cfg;
    cfg.n_particles = 25;
    cfg.max_iterations = 1000;
    RunOptions opt;
    opt.evaluation_limit = 1010;
    std::size_t seen = 0;
    opt.observer = [&](const EvaluationRecord&) { ++seen; };
    const auto r = optimize(sphere_spec(3), cfg, opt);
    CHECK(r.evaluations == 1010);
    CHECK(seen == 1010);
  }
  SUBCASE("serial and parallel evaluation agree bit for bit") {
    for (auto variant : {Variant::pso_standard, Variant::pso_inertia, Variant::apso_velocity,
                         Variant::apso_single_step}) {
      SwarmConfig cfg;
      cfg.variant = variant;
      cfg.seed = 5;
      RunOptions par;
      par.policy = ExecPolicy::parallel;
      const auto a = optimize(sphere_spec(6), cfg);
      const auto b = optimize(sphere_spec(6), cfg, par);
      CHECK(a.best_position == b.best_position);
      CHECK(a.best_fitness == b.best_fitness);
    }
  }
}

TEST_CASE("config file round trip") {
  const auto kv = KeyValueConfig::parse(
      "# sphere run\n"
      "variant = apso_velocity\n"
      "n_particles = 12\n"
      "max_iterations 30\n"
      "alpha0 = 0.25\nbeta = 0.4\ngamma = 0.8\ntheta = 0.6\n"
      "schedule = exponential_decay\nseed = 123456789012\n");
  const auto cfg = SwarmConfig::from_config(kv);
  CHECK(cfg.variant == Variant::apso_velocity);
  CHECK(cfg.n_particles == 12);
  CHECK(cfg.max_iterations == 30);
  CHECK(cfg.alpha0 == 0.25);
  CHECK(cfg.schedule == AlphaSchedule::exponential_decay);
  CHECK(cfg.seed == 123456789012ULL);
  const auto again = SwarmConfig::from_config(cfg.to_config());
  CHECK(again.to_config().entries() == cfg.to_config().entries());

  CHECK_THROWS_AS(SwarmConfig::from_config(KeyValueConfig::parse("variant = firefly\n")),
                  ConfigError);
  CHECK_THROWS_AS(SwarmConfig::from_config(KeyValueConfig::parse("n_particles = -3\n")),
                  ConfigError);
  CHECK_THROWS_AS(SwarmConfig::from_config(KeyValueConfig::parse("beta = lots\n")), ConfigError);
}

TEST_CASE("randomized property sweep") {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> variant_pick(0, 3), sched_pick(0, 2), dim_pick(1, 6);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t dim = static_cast<std::size_t>(dim_pick(gen));
    std::vector<double> lo(dim), hi(dim), shift(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      lo[k] = -10.0 * u01(gen) - 0.1;
      hi[k] = 10.0 * u01(gen) + 0.1;
      shift[k] = lo[k] + u01(gen) * (hi[k] - lo[k]);
    }
    ObjectiveSpec spec{lo, hi, [shift](std::span<const double> x) {
                         double s = 0.0;
                         for (std::size_t k = 0; k < x.size(); ++k) {
                           s += std::abs(x[k] - shift[k]) + std::sin(3.0 * x[k]);
                         }
                         return s;
                       }};
    SwarmConfig cfg;
    cfg.variant = static_cast<Variant>(variant_pick(gen));
    cfg.schedule = static_cast<AlphaSchedule>(sched_pick(gen));
    cfg.n_particles = 2 + gen() % 15;
    cfg.max_iterations = 5 + gen() % 30;
    cfg.alpha0 = 0.05 + u01(gen);
    cfg.beta = 0.05 + 0.95 * u01(gen);
    cfg.gamma = 0.05 + 0.9 * u01(gen);
    cfg.theta = 0.1 + 0.8 * u01(gen);
    cfg.seed = gen();

    bool in_bounds = true;
    RunOptions opt;
    opt.observer = [&](const EvaluationRecord& e) {
      for (std::size_t k = 0; k < dim; ++k) {
        in_bounds = in_bounds && e.position[k] >= lo[k] && e.position[k] <= hi[k];
      }
    };
    auto s = init_swarm(spec, cfg, opt);
    double incumbent = s.global_best_fitness;
    for (std::size_t t = 0; t < cfg.max_iterations; ++t) {
      step(s, spec, cfg, opt);
      CHECK(s.global_best_fitness <= incumbent);
      incumbent = s.global_best_fitness;
      for (double f : s.fitness) CHECK(incumbent <= f);
    }
    CHECK(in_bounds);
    const auto replay = optimize(spec, cfg);
    CHECK(replay.best_position == s.global_best_position);
  }
}

TEST_CASE("contraction toward a stationary g* with alpha = 0") {
  SwarmConfig cfg;
  cfg.alpha0 = 0.0;
  cfg.beta = 0.3;
  cfg.n_particles = 12;
  const auto spec = sphere_spec(4);
  auto s = init_swarm(spec, cfg);
  for (int t = 0; t < 10; ++t) {
    const auto g = s.global_best_position;
    std::vector<double> before(s.n_particles);
    for (std::size_t i = 0; i < s.n_particles; ++i) before[i] = distance(s.position(i), g);
    step(s, spec, cfg);
    if (s.global_best_position != g) continue;
    for (std::size_t i = 0; i < s.n_particles; ++i) {
      CHECK(distance(s.position(i), g) == doctest::Approx(0.7 * before[i]).epsilon(1e-12));
    }
  }
}
