#include "apsosvm/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <list>
#include <sstream>
#include <unordered_map>

#include "apsosvm/errors.hpp"
#include "apsosvm/report.hpp"

namespace apsosvm {

void Dataset::add(std::span<const double> x, int label) {
  if (dim == 0 && labels.empty()) dim = x.size();
  if (x.size() != dim) throw DataError("point dimension mismatch");
  points.insert(points.end(), x.begin(), x.end());
  labels.push_back(label);
}

void Dataset::validate(bool require_both_classes) const {
  if (points.size() != labels.size() * dim) throw DataError("dataset shape is inconsistent");
  if (labels.size() < 2) throw DataError("dataset needs at least two points");
  bool pos = false, neg = false;
  for (int y : labels) {
    if (y == 1) pos = true;
    else if (y == -1) neg = true;
    else throw DataError("labels must be -1 or +1");
  }
  for (double v : points) {
    if (!std::isfinite(v)) throw DataError("dataset contains a non-finite feature");
  }
  if (require_both_classes && !(pos && neg)) throw DataError("training data has a single class");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.dim = dim;
  out.points.reserve(indices.size() * dim);
  out.labels.reserve(indices.size());
  for (auto i : indices) {
    const auto r = row(i);
    out.points.insert(out.points.end(), r.begin(), r.end());
    out.labels.push_back(labels[i]);
  }
  return out;
}

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::linear: return "linear";
    case KernelKind::polynomial: return "polynomial";
    case KernelKind::tanh: return "tanh";
    case KernelKind::rbf: return "rbf";
  }
  return "?";
}

KernelKind parse_kernel_kind(const std::string& name) {
  for (auto k : {KernelKind::linear, KernelKind::polynomial, KernelKind::tanh, KernelKind::rbf}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown kernel `" + name + "`");
}

void KernelSpec::validate() const {
  if (kind == KernelKind::rbf && !(gamma > 0.0 && std::isfinite(gamma))) {
    throw ConfigError("rbf gamma must be positive");
  }
  if (kind == KernelKind::polynomial && degree < 1) {
    throw ConfigError("polynomial degree must be >= 1");
  }
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double kernel_unchecked(const KernelSpec& k, std::span<const double> x,
                        std::span<const double> x2) {
  switch (k.kind) {
    case KernelKind::linear: return dot(x, x2);
    case KernelKind::polynomial: return std::pow(dot(x, x2), k.degree);
    case KernelKind::tanh: return std::tanh(k.k_scale * dot(x, x2) + k.theta_offset);
    case KernelKind::rbf: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = x[i] - x2[i];
        s += diff * diff;
      }
      return std::exp(-k.gamma * s);
    }
  }
  return 0.0;
}

void kernel_row(const Dataset& data, const KernelSpec& kernel, std::size_t i, double* out,
                ExecPolicy policy) {
  const auto xi = data.row(i);
  const auto n = static_cast<long long>(data.size());
  if (policy == ExecPolicy::parallel) {
#pragma omp parallel for schedule(static)
    for (long long j = 0; j < n; ++j) {
      out[j] = kernel_unchecked(kernel, xi, data.row(static_cast<std::size_t>(j)));
    }
  } else {
    for (long long j = 0; j < n; ++j) {
      out[j] = kernel_unchecked(kernel, xi, data.row(static_cast<std::size_t>(j)));
    }
  }
}

// Source of kernel rows K(x_i, .) for the solver: either the full matrix or
// an LRU cache of recently used rows.
class KernelRows {
 public:
  KernelRows(const Dataset& data, const KernelSpec& kernel, const TrainOptions& options)
      : data_(data), kernel_(kernel), policy_(options.policy), n_(data.size()) {
    if (n_ <= options.dense_limit) {
      dense_ = options.policy == ExecPolicy::parallel ? gram_matrix_parallel(data, kernel)
                                                      : gram_matrix_serial(data, kernel);
    } else {
      capacity_ = std::max<std::size_t>(2, options.cache_bytes / (n_ * sizeof(double)));
    }
    diag_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      diag_[i] = kernel_unchecked(kernel, data.row(i), data.row(i));
    }
  }

  const double* row(std::size_t i) {
    if (!dense_.empty()) return dense_.data() + i * n_;
    if (const auto it = index_.find(i); it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->second.data();
    }
    if (lru_.size() >= capacity_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
    }
    lru_.emplace_front(i, std::vector<double>(n_));
    kernel_row(data_, kernel_, i, lru_.front().second.data(), policy_);
    index_[i] = lru_.begin();
    return lru_.front().second.data();
  }

  double diag(std::size_t i) const { return diag_[i]; }

 private:
  using Entry = std::pair<std::size_t, std::vector<double>>;
  const Dataset& data_;
  const KernelSpec& kernel_;
  ExecPolicy policy_;
  std::size_t n_;
  std::vector<double> dense_;
  std::vector<double> diag_;
  std::size_t capacity_ = 0;
  std::list<Entry> lru_;
  std::unordered_map<std::size_t, std::list<Entry>::iterator> index_;
};

constexpr double kTau = 1e-12;

bool in_up(int y, double a, double C) { return (y == 1 && a < C) || (y == -1 && a > 0.0); }
bool in_low(int y, double a, double C) { return (y == -1 && a < C) || (y == 1 && a > 0.0); }

}  // namespace

double kernel_eval(const KernelSpec& k, std::span<const double> x, std::span<const double> x2) {
  if (x.size() != x2.size()) throw DataError("kernel arguments differ in dimension");
  return kernel_unchecked(k, x, x2);
}

std::vector<double> gram_matrix_serial(const Dataset& data, const KernelSpec& kernel) {
  const std::size_t n = data.size();
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k[i * n + j] = kernel_unchecked(kernel, data.row(i), data.row(j));
  }
  return k;
}

std::vector<double> gram_matrix_parallel(const Dataset& data, const KernelSpec& kernel) {
  const std::size_t n = data.size();
  std::vector<double> k(n * n);
  const auto rows = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (long long i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    for (std::size_t j = 0; j < n; ++j) k[r * n + j] = kernel_unchecked(kernel, data.row(r), data.row(j));
  }
  return k;
}

TrainResult train_detailed(const Dataset& data, const KernelSpec& kernel, double C,
                           const TrainOptions& options) {
  if (!(C > 0.0) || !std::isfinite(C)) throw ConfigError("C must be positive");
  if (!(options.tol > 0.0)) throw ConfigError("tolerance must be positive");
  kernel.validate();
  data.validate(true);

  const std::size_t n = data.size();
  const auto& y = data.labels;
  KernelRows rows(data, kernel, options);

  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // gradient of 1/2 a^T Q a - e^T a
  const std::size_t max_iter = std::max<std::size_t>(options.max_passes, 1) * std::max<std::size_t>(n, 100);

  std::size_t iter = 0;
  double gap = 0.0;
  for (;; ++iter) {
    // Maximal violating pair.
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (in_up(y[t], alpha[t], C) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(y[t], alpha[t], C) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    gap = (i == n || j == n) ? 0.0 : gmax - gmin;
    if (gap < options.tol) break;
    if (iter >= max_iter) {
      throw ConvergenceError("SMO did not converge within the pass limit (gap " +
                                 format_real(gap) + ")",
                             gap);
    }

    const double* ki = rows.row(i);
    const double* kj = rows.row(j);
    const double kii = rows.diag(i), kjj = rows.diag(j), kij = ki[j];
    const double old_ai = alpha[i], old_aj = alpha[j];
    double ai = old_ai, aj = old_aj;

    if (y[i] != y[j]) {
      double quad = kii + kjj - 2.0 * kij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) { aj = 0.0; ai = diff; }
      } else {
        if (ai < 0.0) { ai = 0.0; aj = -diff; }
      }
      if (diff > 0.0) {
        if (ai > C) { ai = C; aj = C - diff; }
      } else {
        if (aj > C) { aj = C; ai = C + diff; }
      }
    } else {
      double quad = kii + kjj - 2.0 * kij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > C) {
        if (ai > C) { ai = C; aj = sum - C; }
      } else {
        if (aj < 0.0) { aj = 0.0; ai = sum; }
      }
      if (sum > C) {
        if (aj > C) { aj = C; ai = sum - C; }
      } else {
        if (ai < 0.0) { ai = 0.0; aj = sum; }
      }
    }
    alpha[i] = ai;
    alpha[j] = aj;

    const double dai = (ai - old_ai) * y[i];
    const double daj = (aj - old_aj) * y[j];
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += y[t] * (ki[t] * dai + kj[t] * daj);
    }
  }

  // Bias: average over free vectors, else midpoint of the feasible interval.
  double free_sum = 0.0;
  std::size_t free_count = 0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < n; ++t) {
    const double r = -y[t] * grad[t];
    if (alpha[t] > 0.0 && alpha[t] < C) {
      free_sum += r;
      ++free_count;
    } else if ((alpha[t] == 0.0) == (y[t] == 1)) {
      lower = std::max(lower, r);
    } else {
      upper = std::min(upper, r);
    }
  }
  double bias = 0.0;
  if (free_count > 0) {
    bias = free_sum / static_cast<double>(free_count);
  } else if (std::isfinite(lower) && std::isfinite(upper)) {
    bias = 0.5 * (lower + upper);
  } else if (std::isfinite(lower)) {
    bias = lower;
  } else if (std::isfinite(upper)) {
    bias = upper;
  }

  TrainResult result;
  result.iterations = iter;
  result.final_gap = gap;
  auto& m = result.model;
  m.kernel = kernel;
  m.C = C;
  m.bias = bias;
  m.dim = data.dim;
  double objective = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    // grad = Qa - e, so a^T Q a = a^T (grad + e).
    objective += alpha[t] - 0.5 * alpha[t] * (grad[t] + 1.0);
    if (alpha[t] > 0.0) {
      const auto r = data.row(t);
      m.support_points.insert(m.support_points.end(), r.begin(), r.end());
      m.dual_weights.push_back(alpha[t] * y[t]);
      m.support_indices.push_back(t);
    }
  }
  result.dual_objective = objective;
  result.alpha = std::move(alpha);
  return result;
}

SvmModel train(const Dataset& data, const KernelSpec& kernel, double C, double tol) {
  TrainOptions options;
  options.tol = tol;
  return train_detailed(data, kernel, C, options).model;
}

double decision_value(const SvmModel& model, std::span<const double> x) {
  if (x.size() != model.dim) throw DataError("input dimension does not match the model");
  double f = model.bias;
  for (std::size_t i = 0; i < model.n_support(); ++i) {
    f += model.dual_weights[i] * kernel_unchecked(model.kernel, x, model.support_point(i));
  }
  return f;
}

int predict(const SvmModel& model, std::span<const double> x) {
  return decision_value(model, x) >= 0.0 ? 1 : -1;
}

double error_rate(const SvmModel& model, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predict(model, data.row(i)) != data.labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

double dual_objective(const Dataset& data, const KernelSpec& kernel,
                      std::span<const double> alpha) {
  const std::size_t n = data.size();
  if (alpha.size() != n) throw DataError("alpha length does not match dataset");
  double linear = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    linear += alpha[i];
    if (alpha[i] == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (alpha[j] == 0.0) continue;
      quad += alpha[i] * alpha[j] * data.labels[i] * data.labels[j] *
              kernel_unchecked(kernel, data.row(i), data.row(j));
    }
  }
  return linear - 0.5 * quad;
}

double KktReport::worst() const {
  return std::max({equality_residual, box_residual, zero_residual, free_residual, bound_residual});
}

std::vector<double> recover_alpha(const SvmModel& model, const Dataset& data) {
  std::vector<double> alpha(data.size(), 0.0);
  const bool by_index = model.support_indices.size() == model.n_support();
  for (std::size_t s = 0; s < model.n_support(); ++s) {
    std::size_t row = data.size();
    if (by_index) {
      row = model.support_indices[s];
    } else {
      const auto sp = model.support_point(s);
      for (std::size_t t = 0; t < data.size(); ++t) {
        const auto r = data.row(t);
        if (std::equal(r.begin(), r.end(), sp.begin()) && alpha[t] == 0.0) {
          row = t;
          break;
        }
      }
    }
    if (row >= data.size()) throw DataError("support vector not found in dataset");
    alpha[row] = model.dual_weights[s] * data.labels[row];
  }
  return alpha;
}

KktReport verify_kkt(const SvmModel& model, const Dataset& data, double tol) {
  KktReport rep;
  const auto alpha = recover_alpha(model, data);
  const double C = model.C;
  const double at_bound = C * (1.0 - 1e-12);
  double eq = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double a = alpha[i];
    const int y = data.labels[i];
    eq += a * y;
    rep.box_residual = std::max({rep.box_residual, -a, a - C});
    const double margin = y * decision_value(model, data.row(i));
    if (a <= 0.0) {
      rep.zero_residual = std::max(rep.zero_residual, 1.0 - margin);
    } else if (a < at_bound) {
      rep.free_residual = std::max(rep.free_residual, std::abs(margin - 1.0));
    } else {
      rep.bound_residual = std::max(rep.bound_residual, margin - 1.0);
    }
  }
  rep.equality_residual = std::abs(eq);
  const auto check = [&](double residual, const char* name) {
    if (residual > tol) {
      rep.pass = false;
      rep.violations.push_back(std::string(name) + " residual " + format_real(residual));
    }
  };
  check(rep.equality_residual, "equality");
  check(rep.box_residual, "box");
  check(rep.zero_residual, "zero-multiplier margin");
  check(rep.free_residual, "free-multiplier margin");
  check(rep.bound_residual, "bounded-multiplier margin");
  return rep;
}

void save_model(std::ostream& out, const SvmModel& m) {
  out << "apsosvm_model 1\n"
      << "kernel " << to_string(m.kernel.kind) << '\n'
      << "degree " << m.kernel.degree << '\n'
      << "k_scale " << format_real(m.kernel.k_scale) << '\n'
      << "theta_offset " << format_real(m.kernel.theta_offset) << '\n'
      << "gamma " << format_real(m.kernel.gamma) << '\n'
      << "C " << format_real(m.C) << '\n'
      << "bias " << format_real(m.bias) << '\n'
      << "m " << m.n_support() << '\n'
      << "d " << m.dim << '\n';
  for (std::size_t s = 0; s < m.n_support(); ++s) {
    out << format_real(m.dual_weights[s]);
    for (double v : m.support_point(s)) out << ' ' << format_real(v);
    out << '\n';
  }
}

namespace {

std::string expect_field(std::istream& in, const char* key) {
  std::string k, v;
  if (!(in >> k >> v) || k != key) {
    throw DataError(std::string("model file: expected `") + key + "`");
  }
  return v;
}

double parse_real(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw DataError("model file: bad number `" + s + "`");
  return v;
}

}  // namespace

SvmModel load_model(std::istream& in) {
  if (expect_field(in, "apsosvm_model") != "1") throw DataError("model file: unknown version");
  SvmModel m;
  m.kernel.kind = parse_kernel_kind(expect_field(in, "kernel"));
  m.kernel.degree = static_cast<int>(parse_real(expect_field(in, "degree")));
  m.kernel.k_scale = parse_real(expect_field(in, "k_scale"));
  m.kernel.theta_offset = parse_real(expect_field(in, "theta_offset"));
  m.kernel.gamma = parse_real(expect_field(in, "gamma"));
  m.C = parse_real(expect_field(in, "C"));
  m.bias = parse_real(expect_field(in, "bias"));
  const auto count = static_cast<std::size_t>(parse_real(expect_field(in, "m")));
  m.dim = static_cast<std::size_t>(parse_real(expect_field(in, "d")));
  m.dual_weights.resize(count);
  m.support_points.resize(count * m.dim);
  std::string token;
  for (std::size_t s = 0; s < count; ++s) {
    if (!(in >> token)) throw DataError("model file: truncated support vector table");
    m.dual_weights[s] = parse_real(token);
    for (std::size_t k = 0; k < m.dim; ++k) {
      if (!(in >> token)) throw DataError("model file: truncated support vector table");
      m.support_points[s * m.dim + k] = parse_real(token);
    }
  }
  return m;
}

void save_model(const std::string& path, const SvmModel& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file: " + path);
  save_model(out, model);
}

Dataset load_dataset(std::istream& in) {
  Dataset data;
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string label;
    if (!(fields >> label)) continue;
    const auto where = "line " + std::to_string(lineno) + ": ";
    int y = 0;
    if (label == "1" || label == "+1") {
      y = 1;
    } else if (label == "-1") {
      y = -1;
    } else {
      throw DataError(where + "label must be -1 or +1, got '" + label + "'");
    }
    row.clear();
    std::string tok;
    while (fields >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || !std::isfinite(v)) throw DataError(where + "bad value '" + tok + "'");
      row.push_back(v);
    }
    if (data.size() == 0) {
      if (row.empty()) throw DataError(where + "a row needs at least one feature");
      data.dim = row.size();
    } else if (row.size() != data.dim) {
      throw DataError(where + "expected " + std::to_string(data.dim) + " features, got " +
                      std::to_string(row.size()));
    }
    data.add(row, y);
  }
  if (data.size() == 0) throw DataError("dataset is empty");
  return data;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset: " + path);
  return load_dataset(in);
}

void save_dataset(std::ostream& out, const Dataset& data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << (data.labels[i] > 0 ? "+1" : "-1");
    for (double v : data.row(i)) out << ' ' << format_real(v);
    out << '\n';
  }
}

SvmModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path);
  return load_model(in);
}

}  // namespace apsosvm
