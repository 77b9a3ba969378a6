#include "apsosvm/objectives.hpp"

#include <cmath>
#include <numbers>

#include "apsosvm/errors.hpp"

namespace apsosvm {

double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double rosenbrock(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i], b = 1.0 - x[i];
    s += 100.0 * a * a + b * b;
  }
  return s;
}

double rastrigin(std::span<const double> x) {
  double s = 10.0 * static_cast<double>(x.size());
  for (double v : x) s += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v);
  return s;
}

double ackley(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double n = static_cast<double>(x.size());
  double sq = 0.0, cs = 0.0;
  for (double v : x) {
    sq += v * v;
    cs += std::cos(2.0 * std::numbers::pi * v);
  }
  return -20.0 * std::exp(-0.2 * std::sqrt(sq / n)) - std::exp(cs / n) + 20.0 + std::numbers::e;
}

std::vector<std::string> objective_names() { return {"sphere", "rosenbrock", "rastrigin", "ackley"}; }

ObjectiveSpec make_objective(const std::string& name, std::size_t dimension, double lower,
                             double upper) {
  double (*f)(std::span<const double>) = nullptr;
  if (name == "sphere") f = sphere;
  else if (name == "rosenbrock") f = rosenbrock;
  else if (name == "rastrigin") f = rastrigin;
  else if (name == "ackley") f = ackley;
  else throw ConfigError("unknown objective: " + name);
  if (dimension == 0) throw ConfigError("dimension must be positive");
  ObjectiveSpec spec{std::vector<double>(dimension, lower), std::vector<double>(dimension, upper), f};
  spec.validate();
  return spec;
}

}  // namespace apsosvm
