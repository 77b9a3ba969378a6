#pragma once

// Named test functions for the optimizer front end and benchmarks. All have
// their global minimum 0 at the origin (rosenbrock at (1, ..., 1)).

#include <span>
#include <string>
#include <vector>

#include "apsosvm/apso.hpp"

namespace apsosvm {

double sphere(std::span<const double> x);
double rosenbrock(std::span<const double> x);
double rastrigin(std::span<const double> x);
double ackley(std::span<const double> x);

/// Names accepted by make_objective.
std::vector<std::string> objective_names();

/// Builds a box [lower, upper]^dimension around the named function. Throws
/// ConfigError on an unknown name or an empty box.
ObjectiveSpec make_objective(const std::string& name, std::size_t dimension, double lower,
                             double upper);

}  // namespace apsosvm
