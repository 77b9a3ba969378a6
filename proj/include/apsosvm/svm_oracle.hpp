#pragma once

// Dense reference solver for the SVM dual, independent of the SMO path.
// Intended for small problems in tests and audits.

#include <vector>

#include "apsosvm/svm.hpp"

namespace apsosvm {

struct DualSolution {
  std::vector<double> alpha;
  double objective = 0.0;
  double stationarity = 0.0;  // |a - P(a + grad / L)|_inf at exit
  std::size_t iterations = 0;
};

inline constexpr std::size_t kBruteForceMaxPoints = 50;

/// Accelerated projected gradient ascent on the box-and-hyperplane feasible
/// set. Refuses datasets with more than kBruteForceMaxPoints rows.
DualSolution brute_force_dual(const Dataset& data, const KernelSpec& kernel, double C);

/// Euclidean projection of z onto {0 <= a <= C, y^T a = 0}.
std::vector<double> project_dual_feasible(const std::vector<double>& z, const std::vector<int>& y,
                                          double C);

/// Eigenvalues (ascending) of a symmetric n x n row-major matrix, cyclic Jacobi.
std::vector<double> symmetric_eigenvalues(std::vector<double> a, std::size_t n);

}  // namespace apsosvm
