#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slah/error.hpp"
#include "slah/interference.hpp"
#include "slah/statlearn.hpp"

namespace slah {

constexpr double kMinAlpha = 1e-3;

struct HealingConfig {
  int faulty = 0;
  std::vector<int> ns1;
  double bcr_threshold = 5.0;  // percent
  double gamma = 0.3;
  std::vector<double> init_alphas{0.95, 0.73, 0.50, 0.28, 0.05};
  double alpha_grid_step = 0.0125;
  double convergence_tol = 0.01;
  int convergence_hits = 2;
  int max_iterations = 10;  // optimization iterations
  double alpha_c = 0.5;     // held fixed on the faulty cell

  void validate() const {
    if (ns1.empty()) throw Error(ErrorCategory::InvalidArgument, "first-tier neighbour set is empty");
    if (std::find(ns1.begin(), ns1.end(), faulty) != ns1.end()) {
      throw Error(ErrorCategory::InvalidArgument, "faulty eNB must not be its own neighbour");
    }
    if (init_alphas.size() < 3) {
      throw Error(ErrorCategory::InvalidArgument, "need at least 3 initial alpha_s values");
    }
    for (std::size_t i = 0; i < init_alphas.size(); ++i) {
      if (!(init_alphas[i] > 0.0 && init_alphas[i] <= 1.0)) {
        throw Error(ErrorCategory::InvalidArgument, "initial alpha_s values must lie in (0, 1]");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (init_alphas[i] == init_alphas[j]) {
          throw Error(ErrorCategory::InvalidArgument, "initial alpha_s values must be distinct");
        }
      }
    }
    if (!(alpha_c > 0.0 && alpha_c <= 1.0)) throw Error(ErrorCategory::InvalidArgument, "alpha_c must lie in (0, 1]");
    if (max_iterations < 1 || convergence_hits < 1) {
      throw Error(ErrorCategory::InvalidArgument, "iteration limits must be positive");
    }
  }
};

/// Row of the interference matrix restricted to the first-tier neighbours.
struct CouplingRow {
  std::vector<int> ids;
  std::vector<double> values;

  static CouplingRow from_matrix(const InterferenceMatrix& m, int c, const std::vector<int>& ns1) {
    return {ns1, m.row(c, ns1)};
  }

  std::size_t index_of(int id) const {
    const auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) throw Error(ErrorCategory::InvalidArgument, "eNB " + std::to_string(id) + " not in row");
    return static_cast<std::size_t>(it - ids.begin());
  }

  double at(int id) const { return values[index_of(id)]; }
};

/// The first-tier neighbour most coupled with the faulty cell; ties go to
/// the smallest id.
inline int most_coupled(const InterferenceMatrix& m, int c, const std::vector<int>& ns1) {
  if (ns1.empty()) throw Error(ErrorCategory::InvalidArgument, "first-tier neighbour set is empty");
  int best = -1;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int j : ns1) {
    const double v = m.at(c, j);
    if (v > best_value || (v == best_value && j < best)) {
      best = j;
      best_value = v;
    }
  }
  return best;
}

/// alpha_j = alpha_s + (1 - alpha_s)(1 - I_cj / I_cs), clamped to (0, 1].
inline std::vector<double> propagate_alpha(double alpha_s, const CouplingRow& row, int s) {
  const double denom = row.at(s);
  if (!(denom > 0.0)) {
    throw Error(ErrorCategory::ZeroMaxCoupling, "coupling with the most coupled eNB is zero");
  }
  std::vector<double> out;
  out.reserve(row.ids.size());
  for (std::size_t k = 0; k < row.ids.size(); ++k) {
    if (row.ids[k] == s) {
      out.push_back(alpha_s);
      continue;
    }
    const double a = alpha_s + (1.0 - alpha_s) * (1.0 - row.values[k] / denom);
    out.push_back(std::clamp(a, kMinAlpha, 1.0));
  }
  return out;
}

/// I'_cj = I_cj exp(-gamma B_j), B_j = BCR_j / max_l BCR_l.
/// Identity when every BCR is zero.
inline CouplingRow generalized_interference(const CouplingRow& row, const std::vector<double>& bcr, double gamma) {
  if (bcr.size() != row.values.size()) {
    throw Error(ErrorCategory::InvalidArgument, "BCR vector does not match coupling row");
  }
  const double max_bcr = bcr.empty() ? 0.0 : *std::max_element(bcr.begin(), bcr.end());
  if (!(max_bcr > 0.0)) return row;
  CouplingRow out = row;
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    out.values[k] = row.values[k] * std::exp(-gamma * (bcr[k] / max_bcr));
  }
  return out;
}

/// omega_j = I_cj / sum_l I_cl
inline std::vector<double> weights(const std::vector<double>& row) {
  double sum = 0.0;
  for (double v : row) {
    if (v < 0.0) throw Error(ErrorCategory::InvalidArgument, "negative interference");
    sum += v;
  }
  if (!(sum > 0.0)) throw Error(ErrorCategory::ZeroRow, "interference row is all zero");
  std::vector<double> out;
  out.reserve(row.size());
  for (double v : row) out.push_back(v / sum);
  return out;
}

/// Fitted statistical models for the optimization zone. Neighbour vectors
/// are aligned with the coupling row; the faulty cell's models take alpha_s
/// as their input, each neighbour's its own alpha_j.
struct ZoneModels {
  KpiModel ftt_c;
  KpiModel bcr_c;
  std::vector<KpiModel> ftt;
  std::vector<KpiModel> bcr;
};

/// Surrogate optimization problem for one iteration.
struct SurrogateProblem {
  ZoneModels models;
  CouplingRow coupling;        // generalized row used to map alpha_s to alpha_j
  std::vector<double> omega;   // aligned with coupling.ids
  int s = 0;
  double bcr_threshold = 5.0;

  std::vector<double> neighbour_alphas(double alpha_s) const { return propagate_alpha(alpha_s, coupling, s); }

  /// C(alpha_s) = FTT_c(alpha_s) + sum_j omega_j FTT_j(alpha_j(alpha_s))
  double cost(double alpha_s) const {
    const auto alphas = neighbour_alphas(alpha_s);
    double c = models.ftt_c.predict(alpha_s);
    for (std::size_t k = 0; k < alphas.size(); ++k) c += omega[k] * models.ftt[k].predict(alphas[k]);
    return c;
  }

  /// Largest predicted BCR excess over the threshold; feasible iff < 0.
  double max_violation(double alpha_s) const {
    const auto alphas = neighbour_alphas(alpha_s);
    double v = models.bcr_c.predict(alpha_s) - bcr_threshold;
    for (std::size_t k = 0; k < alphas.size(); ++k) {
      v = std::max(v, models.bcr[k].predict(alphas[k]) - bcr_threshold);
    }
    return v;
  }
};

/// alpha_s grid {step, 2 step, ..., 1}.
inline std::vector<double> alpha_grid(double step) {
  if (!(step > 0.0) || step > 1.0) throw Error(ErrorCategory::InvalidArgument, "grid step must lie in (0, 1]");
  const long n = std::lround(1.0 / step);
  if (std::abs(static_cast<double>(n) * step - 1.0) > 1e-9) {
    throw Error(ErrorCategory::InvalidArgument, "grid step must divide (0, 1]");
  }
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(n));
  for (long k = 1; k <= n; ++k) grid.push_back(k == n ? 1.0 : static_cast<double>(k) * step);
  return grid;
}

struct OptimizationResult {
  double alpha_s = 0.0;
  double cost = 0.0;
  double max_violation = 0.0;
  bool feasible = false;
};

/// Constrained grid minimization of the surrogate cost.
///
/// Minimizes C over feasible grid points. When nothing is feasible the
/// point with the smallest worst-case violation is returned instead. Exact
/// ties go to the point nearest `current_alpha_s`, then to the smaller one.
inline OptimizationResult optimize_alpha_s(const SurrogateProblem& problem, double grid_step, double current_alpha_s) {
  const auto grid = alpha_grid(grid_step);
  std::vector<double> cost(grid.size());
  std::vector<double> violation(grid.size());
  bool any_feasible = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    cost[i] = problem.cost(grid[i]);
    violation[i] = problem.max_violation(grid[i]);
    any_feasible = any_feasible || violation[i] < 0.0;
  }

  std::size_t best = grid.size();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (any_feasible && !(violation[i] < 0.0)) continue;
    if (best == grid.size()) {
      best = i;
      continue;
    }
    const double key = any_feasible ? cost[i] : violation[i];
    const double best_key = any_feasible ? cost[best] : violation[best];
    if (key < best_key ||
        (key == best_key && std::abs(grid[i] - current_alpha_s) < std::abs(grid[best] - current_alpha_s))) {
      best = i;
    }
  }
  return {grid[best], cost[best], violation[best], any_feasible};
}

/// Stop rule: the loop halts once |alpha_s(k) - alpha_s(k-1)| <= tol has
/// been observed `hits` times.
class ConvergenceRule {
 public:
  explicit ConvergenceRule(double tol = 0.01, int hits = 2) : tol_(tol), hits_required_(hits) {}

  void seed(double alpha_s) { last_ = alpha_s; }

  /// Feed the next alpha_s; true once the rule fires.
  bool update(double alpha_s) {
    if (last_ && std::abs(alpha_s - *last_) <= tol_ + 1e-9) ++hits_;
    last_ = alpha_s;
    return hits_ >= hits_required_;
  }

  int hits() const { return hits_; }

 private:
  double tol_;
  int hits_required_;
  int hits_ = 0;
  std::optional<double> last_;
};

enum class Phase { Initialization, Optimization };

inline const char* phase_name(Phase p) { return p == Phase::Initialization ? "init" : "opt"; }

struct KpiObservation {
  std::optional<double> ftt_s;
  std::optional<double> bcr_pct;
};

/// p_k^j: the alpha applied to eNB j at iteration k (and the alpha_s that
/// produced it) with the KPIs observed.
struct DataPoint {
  double alpha_s = 0.0;
  double alpha = 0.0;
  KpiObservation kpi;
};

struct IterationRecord {
  int k = 0;  // 1-based, equals data points per eNB after this iteration
  Phase phase = Phase::Initialization;
  double alpha_s = 0.0;
  std::map<int, double> alphas;
  std::map<int, KpiObservation> kpis;
  std::optional<double> predicted_cost;
  std::optional<bool> feasible;
};

struct HealingState {
  int faulty = 0;
  int s = -1;
  std::vector<int> zone;  // faulty cell first, then NS1 in configured order
  std::map<int, std::vector<DataPoint>> data;
  double current_alpha_s = 0.0;
  int iteration = 0;
  Phase phase = Phase::Initialization;
  bool converged = false;
  std::optional<ZoneModels> models;
  std::vector<IterationRecord> trace;
};

/// Applies an alpha assignment for the zone (faulty cell included) and
/// returns the KPIs observed for every zone eNB. `k` is the 1-based
/// iteration index, for seeding.
using EpisodeRunner = std::function<std::map<int, KpiObservation>(const std::map<int, double>& alphas, int k)>;

namespace detail {

inline std::vector<Sample> samples_for(const std::vector<DataPoint>& points, bool use_alpha_s, bool ftt) {
  std::vector<Sample> out;
  for (const auto& p : points) {
    const auto& v = ftt ? p.kpi.ftt_s : p.kpi.bcr_pct;
    if (v) out.push_back({use_alpha_s ? p.alpha_s : p.alpha, *v});
  }
  return out;
}

inline KpiModel fit_with_context(const std::vector<Sample>& samples, int enb, const char* kpi, int k) {
  try {
    return fit(samples);
  } catch (const Error& e) {
    throw Error(e.category(), "iteration " + std::to_string(k) + ", eNB " + std::to_string(enb) + ", " + kpi +
                                  ": " + e.what());
  }
}

}  // namespace detail

inline ZoneModels fit_zone_models(const HealingState& st, const std::vector<int>& ns1) {
  ZoneModels m;
  const auto& pc = st.data.at(st.faulty);
  m.ftt_c = detail::fit_with_context(detail::samples_for(pc, true, true), st.faulty, "FTT", st.iteration);
  m.bcr_c = detail::fit_with_context(detail::samples_for(pc, true, false), st.faulty, "BCR", st.iteration);
  for (int j : ns1) {
    const auto& pj = st.data.at(j);
    m.ftt.push_back(detail::fit_with_context(detail::samples_for(pj, false, true), j, "FTT", st.iteration));
    m.bcr.push_back(detail::fit_with_context(detail::samples_for(pj, false, false), j, "BCR", st.iteration));
  }
  return m;
}

/// Statistical-learning healing loop for one faulty cell.
///
/// Initialization applies each configured alpha_s in turn. Each
/// optimization iteration then refits FTT and BCR models from all data
/// points, regenerates the coupling row from the latest BCRs, picks the next
/// alpha_s on the grid, applies it and records the new data point.
inline HealingState slah_run(const EpisodeRunner& run, const HealingConfig& cfg, const InterferenceMatrix& matrix) {
  cfg.validate();
  const auto& ns1 = cfg.ns1;

  HealingState st;
  st.faulty = cfg.faulty;
  st.zone.push_back(cfg.faulty);
  st.zone.insert(st.zone.end(), ns1.begin(), ns1.end());
  for (int e : st.zone) st.data[e];

  const CouplingRow raw = CouplingRow::from_matrix(matrix, cfg.faulty, ns1);
  st.s = most_coupled(matrix, cfg.faulty, ns1);
  const std::vector<double> omega = weights(raw.values);

  auto coupling_now = [&] {
    if (st.iteration == 0) return raw;
    std::vector<double> bcr;
    for (int j : ns1) bcr.push_back(st.data.at(j).back().kpi.bcr_pct.value_or(0.0));
    return generalized_interference(raw, bcr, cfg.gamma);
  };

  auto apply = [&](double alpha_s, const CouplingRow& coupling, IterationRecord rec) {
    const auto alphas = propagate_alpha(alpha_s, coupling, st.s);
    rec.alpha_s = alpha_s;
    rec.alphas[cfg.faulty] = cfg.alpha_c;
    for (std::size_t k = 0; k < ns1.size(); ++k) rec.alphas[ns1[k]] = alphas[k];
    rec.k = st.iteration + 1;
    rec.kpis = run(rec.alphas, rec.k);
    for (int e : st.zone) {
      const auto it = rec.kpis.find(e);
      if (it == rec.kpis.end()) {
        throw Error(ErrorCategory::InvalidArgument, "episode returned no KPIs for eNB " + std::to_string(e));
      }
      st.data[e].push_back({alpha_s, rec.alphas.at(e), it->second});
    }
    ++st.iteration;
    st.current_alpha_s = alpha_s;
    st.trace.push_back(std::move(rec));
  };

  st.phase = Phase::Initialization;
  for (double a : cfg.init_alphas) {
    IterationRecord rec;
    rec.phase = Phase::Initialization;
    apply(a, coupling_now(), std::move(rec));
  }

  st.phase = Phase::Optimization;
  ConvergenceRule rule(cfg.convergence_tol, cfg.convergence_hits);
  rule.seed(st.current_alpha_s);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    SurrogateProblem problem;
    problem.models = fit_zone_models(st, ns1);
    problem.coupling = coupling_now();
    problem.omega = omega;
    problem.s = st.s;
    problem.bcr_threshold = cfg.bcr_threshold;
    st.models = problem.models;

    const auto best = optimize_alpha_s(problem, cfg.alpha_grid_step, st.current_alpha_s);
    IterationRecord rec;
    rec.phase = Phase::Optimization;
    rec.predicted_cost = best.cost;
    rec.feasible = best.feasible;
    apply(best.alpha_s, problem.coupling, std::move(rec));

    if (rule.update(best.alpha_s)) {
      st.converged = true;
      break;
    }
  }
  st.models = fit_zone_models(st, ns1);
  return st;
}

}  // namespace slah
