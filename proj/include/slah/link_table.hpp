#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "slah/error.hpp"
#include "slah/scenario.hpp"

namespace slah {

/// SINR-to-rate mapping standing in for link-level quality tables.
///
/// Steps are monotone in SINR. The default table is a truncated Shannon
/// curve, 0.75 log2(1 + SINR) capped at 4.8 bit/s/Hz, sampled at 15 CQI-like
/// thresholds evenly spaced from -6.5 dB up to the cap.
class LinkTable {
 public:
  struct Step {
    double min_sinr_db;
    double bits_per_s_per_prb;
  };

  explicit LinkTable(std::vector<Step> steps) : steps_(std::move(steps)) {
    if (steps_.empty()) throw Error(ErrorCategory::InvalidArgument, "empty link table");
    for (std::size_t i = 1; i < steps_.size(); ++i) {
      if (!(steps_[i].min_sinr_db > steps_[i - 1].min_sinr_db) ||
          steps_[i].bits_per_s_per_prb < steps_[i - 1].bits_per_s_per_prb) {
        throw Error(ErrorCategory::InvalidArgument, "link table must be monotone");
      }
    }
  }

  static LinkTable truncated_shannon(double floor_db = -6.5, int levels = 15, double attenuation = 0.75,
                                     double max_efficiency = 4.8) {
    const double cap_linear = std::pow(2.0, max_efficiency / attenuation) - 1.0;
    const double cap_db = 10.0 * std::log10(cap_linear);
    std::vector<Step> steps;
    for (int k = 0; k < levels; ++k) {
      const double t = floor_db + (cap_db - floor_db) * k / (levels - 1);
      const double eff = std::min(attenuation * std::log2(1.0 + std::pow(10.0, t / 10.0)), max_efficiency);
      steps.push_back({t, kPrbBandwidthHz * eff});
    }
    return LinkTable(std::move(steps));
  }

  /// Rate of a single PRB, bits/s; zero below the lowest threshold.
  double prb_rate(double sinr_db) const {
    auto it = std::upper_bound(steps_.begin(), steps_.end(), sinr_db,
                               [](double v, const Step& s) { return v < s.min_sinr_db; });
    if (it == steps_.begin()) return 0.0;
    return std::prev(it)->bits_per_s_per_prb;
  }

  double throughput(double sinr_db, int n_prbs) const {
    if (n_prbs < 1) throw Error(ErrorCategory::InvalidArgument, "n_prbs must be >= 1");
    return n_prbs * prb_rate(sinr_db);
  }

  double max_prb_rate() const { return steps_.back().bits_per_s_per_prb; }
  const std::vector<Step>& steps() const { return steps_; }

 private:
  std::vector<Step> steps_;
};

}  // namespace slah
