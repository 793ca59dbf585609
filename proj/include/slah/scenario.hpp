#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "slah/error.hpp"

namespace slah {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

constexpr double kPrbBandwidthHz = 180e3;
constexpr int kSubbandCount = 3;

/// One eNB: a single omni cell with a soft-frequency-reuse power mask.
///
/// PRBs are indexed globally as `subband * prbs_per_subband + index`. The
/// protected subband is transmitted at `max_power_dbm`, the two centre
/// subbands at `alpha` times that power.
struct EnbConfig {
  int id = 0;
  Vec2 position;
  double max_power_dbm = 30.0;  // per PRB
  double alpha = 0.5;
  int total_prbs = 24;
  int prbs_per_subband = 8;
  int protected_subband = 0;

  bool is_protected(int prb) const { return prb / prbs_per_subband == protected_subband; }

  /// Linear transmit power on `prb`, milliwatts.
  double prb_power_mw(int prb) const {
    const double full = dbm_to_mw(max_power_dbm);
    return is_protected(prb) ? full : alpha * full;
  }

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
      throw Error(ErrorCategory::InvalidArgument, "alpha must lie in (0, 1]");
    }
    if (prbs_per_subband < 1 || total_prbs != kSubbandCount * prbs_per_subband) {
      throw Error(ErrorCategory::InvalidArgument, "total_prbs must equal 3 * prbs_per_subband");
    }
    if (protected_subband < 0 || protected_subband >= kSubbandCount) {
      throw Error(ErrorCategory::InvalidArgument, "protected_subband must be 0, 1 or 2");
    }
  }
};

struct NetworkLayout {
  std::vector<EnbConfig> enbs;
  double inter_site_distance = 500.0;
  double cell_radius = 500.0 / std::sqrt(3.0);

  std::size_t size() const { return enbs.size(); }

  const EnbConfig& enb(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= enbs.size() || enbs[id].id != id) {
      throw Error(ErrorCategory::InvalidArgument, "unknown eNB id " + std::to_string(id));
    }
    return enbs[id];
  }

  std::vector<double> alphas() const {
    std::vector<double> out;
    out.reserve(enbs.size());
    for (const auto& e : enbs) out.push_back(e.alpha);
    return out;
  }

  void set_alphas(const std::vector<double>& alphas) {
    if (alphas.size() != enbs.size()) {
      throw Error(ErrorCategory::InvalidArgument, "alpha vector size does not match layout");
    }
    for (std::size_t i = 0; i < enbs.size(); ++i) enbs[i].alpha = alphas[i];
  }

  /// eNBs whose site lies within (lo, hi) inter-site distances of `centre`.
  std::vector<int> ring(int centre, double lo, double hi) const {
    std::vector<int> out;
    const Vec2 c = enb(centre).position;
    for (const auto& e : enbs) {
      if (e.id == centre) continue;
      const double d = distance(c, e.position) / inter_site_distance;
      if (d > lo && d < hi) out.push_back(e.id);
    }
    return out;
  }

  std::vector<int> first_tier(int centre) const { return ring(centre, 0.5, 1.5); }
  std::vector<int> second_tier(int centre) const { return ring(centre, 1.5, 2.5); }

  void validate() const {
    for (std::size_t i = 0; i < enbs.size(); ++i) {
      if (enbs[i].id != static_cast<int>(i)) {
        throw Error(ErrorCategory::InvalidArgument, "eNB ids must be 0..n-1 in order");
      }
      enbs[i].validate();
      for (std::size_t j = i + 1; j < enbs.size(); ++j) {
        if (enbs[i].position == enbs[j].position) {
          throw Error(ErrorCategory::InvalidArgument, "eNB positions must be distinct");
        }
      }
    }
  }
};

struct PropagationParams {
  double pathloss_intercept = 128.1;       // dB at the reference distance
  double pathloss_exponent_coeff = 37.6;   // dB per decade
  double reference_distance_m = 1000.0;
  double shadowing_stddev = 8.0;           // dB
  double noise_dbm_per_prb = -112.45;      // thermal over 180 kHz plus 9 dB noise figure
  double min_distance_m = 1.0;

  double noise_mw() const { return dbm_to_mw(noise_dbm_per_prb); }

  void validate() const {
    if (shadowing_stddev < 0.0) {
      throw Error(ErrorCategory::InvalidArgument, "shadowing_stddev must be >= 0");
    }
    if (pathloss_exponent_coeff < 0.0) {
      throw Error(ErrorCategory::InvalidArgument, "pathloss must be non-decreasing in distance");
    }
    if (!(reference_distance_m > 0.0) || !(min_distance_m > 0.0)) {
      throw Error(ErrorCategory::InvalidArgument, "distances must be positive");
    }
  }
};

struct TrafficParams {
  double arrival_rate = 0.6;      // calls / second / cell
  double file_size_kbits = 6300.0;
  int min_prbs_per_user = 1;
  int max_prbs_per_user = 4;
  std::map<int, double> load_factors;  // per-eNB arrival-rate multipliers, default 1

  double file_bits() const { return file_size_kbits * 1000.0; }

  double rate_for(int enb) const {
    const auto it = load_factors.find(enb);
    return it == load_factors.end() ? arrival_rate : arrival_rate * it->second;
  }

  void validate() const {
    if (min_prbs_per_user < 1 || max_prbs_per_user < min_prbs_per_user) {
      throw Error(ErrorCategory::InvalidArgument, "need 1 <= min_prbs_per_user <= max_prbs_per_user");
    }
    if (arrival_rate < 0.0) throw Error(ErrorCategory::InvalidArgument, "arrival_rate must be non-negative");
    for (const auto& [enb, f] : load_factors) {
      if (f < 0.0) throw Error(ErrorCategory::InvalidArgument, "load factors must be non-negative");
    }
    if (!(file_size_kbits > 0.0)) {
      throw Error(ErrorCategory::InvalidArgument, "file_size_kbits must be positive");
    }
  }
};

inline double pathloss_db(double distance_m, const PropagationParams& p) {
  const double d = std::max(distance_m, p.min_distance_m);
  return p.pathloss_intercept + p.pathloss_exponent_coeff * std::log10(d / p.reference_distance_m);
}

inline double received_power_dbm(double tx_power_dbm, double distance_m, double shadowing_db,
                                 const PropagationParams& p) {
  return tx_power_dbm - pathloss_db(distance_m, p) + shadowing_db;
}

namespace detail {

// Axial hex coordinates; the six unit directions in ring-walk order.
constexpr int kHexDirections[6][2] = {{1, 0}, {1, -1}, {0, -1}, {-1, 0}, {-1, 1}, {0, 1}};

inline int positive_mod(int v, int m) { return ((v % m) + m) % m; }

}  // namespace detail

/// Hexagonal grid of 1 + 3 r (r + 1) sites, centre first, then ring by ring.
///
/// Protected subbands follow a reuse-3 colouring, so no two adjacent sites
/// protect the same subband.
inline NetworkLayout build_hex_grid(int rings, double inter_site_distance,
                                    const EnbConfig& defaults = {}) {
  if (rings < 1) throw Error(ErrorCategory::InvalidArgument, "rings must be >= 1");
  if (!(inter_site_distance > 0.0)) {
    throw Error(ErrorCategory::InvalidArgument, "inter_site_distance must be positive");
  }

  NetworkLayout layout;
  layout.inter_site_distance = inter_site_distance;
  layout.cell_radius = inter_site_distance / std::sqrt(3.0);

  auto add = [&](int q, int r) {
    EnbConfig e = defaults;
    e.id = static_cast<int>(layout.enbs.size());
    e.position = {inter_site_distance * (q + 0.5 * r), inter_site_distance * (std::sqrt(3.0) / 2.0) * r};
    e.protected_subband = detail::positive_mod(q + 2 * r, kSubbandCount);
    layout.enbs.push_back(e);
  };

  add(0, 0);
  for (int ring = 1; ring <= rings; ++ring) {
    int q = detail::kHexDirections[4][0] * ring;
    int r = detail::kHexDirections[4][1] * ring;
    for (const auto& dir : detail::kHexDirections) {
      for (int step = 0; step < ring; ++step) {
        add(q, r);
        q += dir[0];
        r += dir[1];
      }
    }
  }
  layout.validate();
  return layout;
}

}  // namespace slah
