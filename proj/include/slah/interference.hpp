#pragma once

#include <cstddef>
#include <vector>

#include "slah/error.hpp"

namespace slah {

/// Dense square matrix of time-averaged downlink coupling, milliwatts.
/// Element (c, j) is the interference inflicted on cell c's users by cell j.
class InterferenceMatrix {
 public:
  InterferenceMatrix() = default;
  explicit InterferenceMatrix(std::size_t n) : n_(n), values_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double& at(std::size_t c, std::size_t j) { return values_.at(c * n_ + j); }
  double at(std::size_t c, std::size_t j) const { return values_.at(c * n_ + j); }

  /// Row c restricted to `columns`, in the given order.
  std::vector<double> row(int c, const std::vector<int>& columns) const {
    std::vector<double> out;
    out.reserve(columns.size());
    for (int j : columns) out.push_back(at(c, j));
    return out;
  }

  friend bool operator==(const InterferenceMatrix&, const InterferenceMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

/// What a victim user experiences during one step: the PRBs it was
/// scheduled on and its linear channel gain towards every eNB.
struct VictimExposure {
  int serving = 0;
  std::vector<int> prbs;
  std::vector<double> gain;  // per eNB, received = gain * transmitted
};

/// Snapshot of one simulated second.
///
/// `tx_mw[enb * n_prbs + prb]` is the power eNB radiates on that PRB; zero
/// means the PRB is not allocated and the eNB is silent there.
struct StepActivity {
  int n_enbs = 0;
  int n_prbs = 0;
  std::vector<double> tx_mw;
  std::vector<VictimExposure> victims;

  StepActivity() = default;
  StepActivity(int enbs, int prbs)
      : n_enbs(enbs), n_prbs(prbs), tx_mw(static_cast<std::size_t>(enbs) * prbs, 0.0) {}

  double tx(int enb, int prb) const { return tx_mw[static_cast<std::size_t>(enb) * n_prbs + prb]; }
  double& tx(int enb, int prb) { return tx_mw[static_cast<std::size_t>(enb) * n_prbs + prb]; }

  /// Interference power seen by `v` on `prb` from every eNB but its own.
  double interference_mw(const VictimExposure& v, int prb) const {
    double sum = 0.0;
    for (int j = 0; j < n_enbs; ++j) {
      if (j == v.serving) continue;
      sum += v.gain[j] * tx(j, prb);
    }
    return sum;
  }
};

/// Running sum behind the interference matrix estimate.
class InterferenceAccumulator {
 public:
  InterferenceAccumulator() = default;
  explicit InterferenceAccumulator(std::size_t n_enbs) : sums_(n_enbs) {}

  void add(const StepActivity& step) {
    for (const auto& v : step.victims) {
      for (int prb : v.prbs) {
        for (int j = 0; j < step.n_enbs; ++j) {
          if (j == v.serving) continue;
          const double tx = step.tx(j, prb);
          if (tx > 0.0) sums_.at(v.serving, j) += v.gain[j] * tx;
        }
      }
    }
    ++steps_;
  }

  long steps() const { return steps_; }

  /// Time average of the accumulated interference.
  InterferenceMatrix estimate() const {
    if (steps_ <= 0) {
      throw Error(ErrorCategory::InvalidArgument, "interference window is empty");
    }
    InterferenceMatrix out(sums_.size());
    for (std::size_t c = 0; c < sums_.size(); ++c) {
      for (std::size_t j = 0; j < sums_.size(); ++j) {
        if (c != j) out.at(c, j) = sums_.at(c, j) / static_cast<double>(steps_);
      }
    }
    return out;
  }

 private:
  InterferenceMatrix sums_;
  long steps_ = 0;
};

}  // namespace slah
