#pragma once

// Independent reference computations used by the tests. Nothing here calls
// the library routine it is meant to check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "slah/healer.hpp"
#include "slah/interference.hpp"
#include "slah/statlearn.hpp"

namespace oracle {

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct Frame {
  double lo = 0.0;
  double hi = 1.0;
};

// 10% of the observed range on each side, never less than 1e-6.
inline Frame frame_for(const std::vector<slah::Sample>& s) {
  double lo = s.front().y, hi = s.front().y;
  for (const auto& p : s) {
    lo = std::min(lo, p.y);
    hi = std::max(hi, p.y);
  }
  const double margin = std::max(0.1 * (hi - lo), 1e-6);
  return {lo - margin, hi + margin};
}

inline double loss(double b0, double b1, const Frame& f, const std::vector<slah::Sample>& s) {
  double sum = 0.0;
  for (const auto& p : s) {
    const double r = (p.y - f.lo) / (f.hi - f.lo) - logistic(b0 + b1 * p.x);
    sum += r * r;
  }
  return sum;
}

// Dense 2-D grid over b0 in [-50, 50], b1 in [-100, 100], followed by a
// shrinking compass search from the best cell, confined to the same box.
// Returns the smallest loss found.
inline double grid_min_loss(const std::vector<slah::Sample>& s, int n0 = 201, int n1 = 401) {
  const Frame f = frame_for(s);
  double best = std::numeric_limits<double>::infinity(), bb0 = 0.0, bb1 = 0.0;
  for (int i = 0; i < n0; ++i) {
    const double b0 = -50.0 + 100.0 * i / (n0 - 1);
    for (int j = 0; j < n1; ++j) {
      const double b1 = -100.0 + 200.0 * j / (n1 - 1);
      const double l = loss(b0, b1, f, s);
      if (l < best) best = l, bb0 = b0, bb1 = b1;
    }
  }
  double h0 = 100.0 / (n0 - 1), h1 = 200.0 / (n1 - 1);
  while (h0 > 1e-10 || h1 > 1e-10) {
    bool moved = false;
    const double cand[4][2] = {{bb0 + h0, bb1}, {bb0 - h0, bb1}, {bb0, bb1 + h1}, {bb0, bb1 - h1}};
    for (const auto& c : cand) {
      if (std::abs(c[0]) > 50.0 || std::abs(c[1]) > 100.0) continue;
      const double l = loss(c[0], c[1], f, s);
      if (l < best) best = l, bb0 = c[0], bb1 = c[1], moved = true;
    }
    if (!moved) h0 *= 0.5, h1 *= 0.5;
  }
  return best;
}

// Exhaustive constrained grid search with the documented selection rules,
// written without reference to optimize_alpha_s.
struct GridChoice {
  double alpha_s;
  bool feasible;
};

inline GridChoice exhaustive_argmin(const slah::SurrogateProblem& p, double step, double current) {
  const long n = std::lround(1.0 / step);
  std::vector<double> xs, cost, viol;
  for (long k = 1; k <= n; ++k) {
    const double x = k == n ? 1.0 : k * step;
    xs.push_back(x);
    const auto a = slah::propagate_alpha(x, p.coupling, p.s);
    double c = p.models.ftt_c.predict(x);
    double v = p.models.bcr_c.predict(x) - p.bcr_threshold;
    for (std::size_t j = 0; j < a.size(); ++j) {
      c += p.omega[j] * p.models.ftt[j].predict(a[j]);
      v = std::max(v, p.models.bcr[j].predict(a[j]) - p.bcr_threshold);
    }
    cost.push_back(c);
    viol.push_back(v);
  }
  const bool any = std::any_of(viol.begin(), viol.end(), [](double v) { return v < 0.0; });
  double best_key = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (any && viol[i] >= 0.0) continue;
    best_key = std::min(best_key, any ? cost[i] : viol[i]);
  }
  // all points attaining the key; nearest to `current`, then the smaller
  double pick = -1.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (any && viol[i] >= 0.0) continue;
    if ((any ? cost[i] : viol[i]) != best_key) continue;
    if (pick < 0.0 || std::abs(xs[i] - current) < std::abs(pick - current)) pick = xs[i];
  }
  return {pick, any};
}

// Average interference per (victim cell, source cell) over a hand-built
// trace: for every victim and each of its PRBs add gain * power of every
// other cell transmitting there, then divide by the number of steps.
inline std::vector<std::vector<double>> replay_interference(const std::vector<slah::StepActivity>& trace) {
  const int n = trace.front().n_enbs;
  std::vector<std::vector<double>> sum(n, std::vector<double>(n, 0.0));
  for (const auto& st : trace) {
    for (const auto& v : st.victims) {
      for (int prb : v.prbs) {
        for (int j = 0; j < n; ++j) {
          if (j != v.serving) sum[v.serving][j] += v.gain[j] * st.tx_mw[j * st.n_prbs + prb];
        }
      }
    }
  }
  for (auto& row : sum) {
    for (auto& x : row) x /= static_cast<double>(trace.size());
  }
  return sum;
}

// Random surrogate problem with 2..6 neighbours and logistic models whose
// BCR predictions straddle the threshold.
inline slah::SurrogateProblem random_problem(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> count(2, 6);
  auto model = [&](double lo, double span) {
    slah::KpiModel m;
    m.beta0 = -6.0 + 12.0 * u(rng);
    m.beta1 = -12.0 + 24.0 * u(rng);
    m.y_lo = lo * u(rng);
    m.y_hi = m.y_lo + 0.1 + span * u(rng);
    return m;
  };
  slah::SurrogateProblem p;
  const int n = count(rng);
  for (int k = 0; k < n; ++k) {
    p.coupling.ids.push_back(k + 1);
    p.coupling.values.push_back(u(rng) < 0.15 ? 0.0 : u(rng));
  }
  p.s = 1 + static_cast<int>(u(rng) * n) % n;
  p.coupling.values[static_cast<std::size_t>(p.s - 1)] = 1.0 + u(rng);
  double sum = 0.0;
  for (double v : p.coupling.values) sum += v;
  for (double v : p.coupling.values) p.omega.push_back(v / sum);
  p.models.ftt_c = model(20.0, 30.0);
  p.models.bcr_c = model(2.0, 6.0);
  for (int k = 0; k < n; ++k) {
    p.models.ftt.push_back(model(20.0, 30.0));
    p.models.bcr.push_back(model(2.0, 6.0));
  }
  p.bcr_threshold = 5.0;
  return p;
}

}  // namespace oracle
