#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "slah/healer.hpp"
#include "slah/seeding.hpp"
#include "slah/statlearn.hpp"

namespace slah {

/// lo + amplitude * f_log(b0 + b1 x)
struct LogisticCurve {
  double lo = 0.0;
  double amplitude = 1.0;
  double b0 = 0.0;
  double b1 = 0.0;

  double operator()(double x) const { return lo + amplitude * f_log(b0 + b1 * x); }
};

/// Analytic stand-in for the network: known FTT/BCR curves plus Gaussian
/// noise. The faulty cell's KPIs are functions of alpha_s, every
/// neighbour's of its own alpha_j.
struct SyntheticOracle {
  LogisticCurve ftt_c{10.0, 20.0, -4.0, 8.0};
  LogisticCurve bcr_c{1.0, 8.0, -3.0, 6.0};
  LogisticCurve ftt_j{8.0, 12.0, 3.0, -8.0};
  LogisticCurve bcr_j{0.5, 12.0, 2.0, -10.0};
  double noise_fraction = 0.05;  // noise sigma as a fraction of each curve's amplitude
  int faulty = 0;
  std::vector<int> ns1{1, 2, 3, 4, 5, 6};
  std::vector<double> coupling{9.0, 4.0, 2.5, 6.0, 1.5, 3.0};  // I_cj aligned with ns1

  InterferenceMatrix matrix() const {
    int n = faulty;
    for (int j : ns1) n = std::max(n, j);
    InterferenceMatrix m(static_cast<std::size_t>(n) + 1);
    for (std::size_t k = 0; k < ns1.size(); ++k) m.at(faulty, ns1[k]) = coupling[k];
    return m;
  }

  /// Episode runner drawing noise from (root, k, "oracle").
  EpisodeRunner runner(std::uint64_t root_seed) const {
    const int s = most_coupled(matrix(), faulty, ns1);
    return [oracle = *this, root_seed, s](const std::map<int, double>& alphas, int k) {
      Rng rng(derive_seed(root_seed, static_cast<std::uint64_t>(k), "oracle"));
      std::normal_distribution<double> unit(0.0, 1.0);
      auto noisy = [&](const LogisticCurve& curve, double x) {
        return curve(x) + oracle.noise_fraction * std::abs(curve.amplitude) * unit(rng);
      };
      // the most coupled neighbour always carries alpha_s itself
      const double alpha_s = alphas.at(s);

      std::map<int, KpiObservation> out;
      out[oracle.faulty] = {noisy(oracle.ftt_c, alpha_s), noisy(oracle.bcr_c, alpha_s)};
      for (int j : oracle.ns1) {
        const double a = alphas.at(j);
        out[j] = {noisy(oracle.ftt_j, a), noisy(oracle.bcr_j, a)};
      }
      return out;
    };
  }

  /// The noiseless surrogate problem under the raw coupling row.
  SurrogateProblem truth(double bcr_threshold) const {
    SurrogateProblem p;
    p.coupling = {ns1, coupling};
    p.omega = weights(coupling);
    p.s = most_coupled(matrix(), faulty, ns1);
    p.bcr_threshold = bcr_threshold;
    // Exact curves expressed as models on an identity frame.
    auto as_model = [](const LogisticCurve& c) {
      KpiModel m;
      m.beta0 = c.b0;
      m.beta1 = c.b1;
      m.y_lo = c.lo;
      m.y_hi = c.lo + c.amplitude;
      return m;
    };
    p.models.ftt_c = as_model(ftt_c);
    p.models.bcr_c = as_model(bcr_c);
    for (std::size_t k = 0; k < ns1.size(); ++k) {
      p.models.ftt.push_back(as_model(ftt_j));
      p.models.bcr.push_back(as_model(bcr_j));
    }
    return p;
  }

  /// Ground-truth constrained optimum on the alpha_s grid.
  OptimizationResult optimum(double bcr_threshold, double grid_step) const {
    return optimize_alpha_s(truth(bcr_threshold), grid_step, 1.0);
  }
};

}  // namespace slah
