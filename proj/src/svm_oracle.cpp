#include "apsosvm/svm_oracle.hpp"

#include <algorithm>
#include <cmath>

#include "apsosvm/errors.hpp"

namespace apsosvm {

std::vector<double> project_dual_feasible(const std::vector<double>& z, const std::vector<int>& y,
                                          double C) {
  const std::size_t n = z.size();
  std::vector<double> a(n);
  const auto fill = [&](double mu) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = std::clamp(z[i] - mu * y[i], 0.0, C);
      s += a[i] * y[i];
    }
    return s;
  };
  // y^T a(mu) is non-increasing in mu.
  double span = C;
  for (double v : z) span = std::max(span, std::abs(v) + C);
  double lo = -span, hi = span;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (fill(mid) > 0.0) lo = mid;
    else hi = mid;
  }
  fill(0.5 * (lo + hi));
  return a;
}

DualSolution brute_force_dual(const Dataset& data, const KernelSpec& kernel, double C) {
  const std::size_t n = data.size();
  if (n > kBruteForceMaxPoints) throw ConfigError("brute_force_dual is limited to 50 points");
  if (!(C > 0.0)) throw ConfigError("C must be positive");
  data.validate(true);
  kernel.validate();

  std::vector<double> q(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      q[i * n + j] = data.labels[i] * data.labels[j] * kernel_eval(kernel, data.row(i), data.row(j));
    }
  }
  // Gershgorin bound on the largest eigenvalue of Q.
  double lip = 1e-12;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += std::abs(q[i * n + j]);
    lip = std::max(lip, row);
  }
  const auto gradient = [&](const std::vector<double>& a, std::vector<double>& g) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += q[i * n + j] * a[j];
      g[i] = 1.0 - s;  // ascent direction of sum a - 1/2 a^T Q a
    }
  };
  const auto objective = [&](const std::vector<double>& a) {
    double lin = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      lin += a[i];
      for (std::size_t j = 0; j < n; ++j) quad += a[i] * q[i * n + j] * a[j];
    }
    return lin - 0.5 * quad;
  };

  DualSolution sol;
  std::vector<double> a(n, 0.0), prev = a, look = a, g(n), z(n);
  double t = 1.0;
  double best = objective(a);
  bool restarted = false;
  const auto stationarity = [&] {
    gradient(a, g);
    for (std::size_t i = 0; i < n; ++i) z[i] = a[i] + g[i] / lip;
    const auto p = project_dual_feasible(z, data.labels, C);
    double stat = 0.0;
    for (std::size_t i = 0; i < n; ++i) stat = std::max(stat, std::abs(p[i] - a[i]));
    return stat;
  };
  const std::size_t max_iter = 500000;
  for (std::size_t it = 0; it < max_iter; ++it) {
    sol.iterations = it + 1;
    gradient(look, g);
    for (std::size_t i = 0; i < n; ++i) z[i] = look[i] + g[i] / lip;
    prev = a;
    a = project_dual_feasible(z, data.labels, C);
    const double obj = objective(a);
    if (obj < best) {
      a = prev;
      // A plain projected gradient step from the incumbent no longer
      // improves it: converged to rounding level.
      if (restarted) break;
      // Adaptive restart keeps the accelerated iterates monotone.
      restarted = true;
      t = 1.0;
      look = prev;
      continue;
    }
    restarted = false;
    best = obj;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t i = 0; i < n; ++i) look[i] = a[i] + ((t - 1.0) / t_next) * (a[i] - prev[i]);
    t = t_next;
    if (it % 50 == 0 && stationarity() <= 1e-10) break;
  }
  sol.stationarity = stationarity();
  sol.objective = objective(a);
  sol.alpha = std::move(a);
  return sol;
}

std::vector<double> symmetric_eigenvalues(std::vector<double> a, std::size_t n) {
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t r = p + 1; r < n; ++r) off += a[p * n + r] * a[p * n + r];
    }
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t r = p + 1; r < n; ++r) {
        const double apr = a[p * n + r];
        if (std::abs(apr) < 1e-300) continue;
        const double theta = (a[r * n + r] - a[p * n + p]) / (2.0 * apr);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akr = a[k * n + r];
          a[k * n + p] = c * akp - s * akr;
          a[k * n + r] = s * akp + c * akr;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k], ark = a[r * n + k];
          a[p * n + k] = c * apk - s * ark;
          a[r * n + k] = s * apk + c * ark;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a[i * n + i];
  std::sort(eig.begin(), eig.end());
  return eig;
}

}  // namespace apsosvm
