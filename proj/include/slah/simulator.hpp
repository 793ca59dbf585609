#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "slah/error.hpp"
#include "slah/interference.hpp"
#include "slah/link_table.hpp"
#include "slah/scenario.hpp"
#include "slah/seeding.hpp"

namespace slah {

constexpr double kRsrpAdmissionDbm = -104.0;

/// Everything an episode needs besides the per-eNB alpha vector.
struct SimContext {
  NetworkLayout layout;
  PropagationParams propagation;
  TrafficParams traffic;
  LinkTable link = LinkTable::truncated_shannon();
  double rsrp_threshold_dbm = kRsrpAdmissionDbm;

  void validate() const {
    layout.validate();
    propagation.validate();
    traffic.validate();
  }
};

struct UserSession {
  long id = 0;
  int serving = 0;
  Vec2 position;
  double remaining_bits = 0.0;
  double quality = 0.0;  // pilot SINR, linear
  std::vector<int> prbs;
  long arrival_time = 0;
  std::vector<double> shadowing_db;  // per eNB
  std::vector<double> gain;          // per eNB, linear, shadowing included
};

struct EnbCounters {
  long arrivals = 0;
  long blocks = 0;
  long completions = 0;
  double transfer_time_sum = 0.0;

  friend bool operator==(const EnbCounters&, const EnbCounters&) = default;
};

struct SimState {
  long time = 0;
  std::vector<UserSession> sessions;
  Rng rng;
  long next_session_id = 0;
  std::vector<EnbCounters> lifetime;  // whole episode
  std::vector<EnbCounters> window;    // KPI window only
  bool window_open = false;
  InterferenceAccumulator interference;

  SimState() = default;
  SimState(std::size_t n_enbs, std::uint64_t seed)
      : rng(seed), lifetime(n_enbs), window(n_enbs), interference(n_enbs) {}

  long active_at(int enb) const {
    return std::count_if(sessions.begin(), sessions.end(), [enb](const UserSession& s) { return s.serving == enb; });
  }
};

enum class Admission { Admit, Block };

/// Admission on the serving cell's RSRP (strictly above threshold) and PRB
/// availability.
inline Admission admit(double rsrp_dbm, int free_prbs, double threshold_dbm = kRsrpAdmissionDbm) {
  return (rsrp_dbm > threshold_dbm && free_prbs >= 1) ? Admission::Admit : Admission::Block;
}

/// q_u = Pr_s / (sum_{j != s} Pr_j + noise), linear.
inline double quality_metric(const std::vector<double>& pilot_mw, int serving, double noise_mw) {
  double interference = 0.0;
  for (std::size_t j = 0; j < pilot_mw.size(); ++j) {
    if (static_cast<int>(j) != serving) interference += pilot_mw[j];
  }
  return pilot_mw.at(serving) / (interference + noise_mw);
}

struct AllocationRequest {
  long id = 0;           // arrival order; lower ids arrived first
  double quality = 0.0;  // q_u
};

/// Soft-reuse PRB allocation for the sessions of one eNB.
///
/// PRB counts: every session gets the minimum, then extra PRBs up to the
/// maximum go first-come first-served. Placement: sessions in ascending q_u
/// take PRBs from the protected subband first and continue into the centre
/// subbands once it is full. Result is indexed like `requests`.
inline std::vector<std::vector<int>> allocate_prbs(const std::vector<AllocationRequest>& requests,
                                                   const EnbConfig& enb, const TrafficParams& traffic) {
  const std::size_t n = requests.size();
  std::vector<int> count(n, 0);

  std::vector<std::size_t> by_arrival(n);
  std::iota(by_arrival.begin(), by_arrival.end(), 0);
  std::sort(by_arrival.begin(), by_arrival.end(),
            [&](std::size_t a, std::size_t b) { return requests[a].id < requests[b].id; });

  int free = enb.total_prbs;
  for (std::size_t i : by_arrival) {
    const int take = std::min(traffic.min_prbs_per_user, free);
    count[i] = take;
    free -= take;
  }
  for (std::size_t i : by_arrival) {
    if (count[i] == 0) continue;
    const int take = std::min(traffic.max_prbs_per_user - count[i], free);
    count[i] += take;
    free -= take;
  }

  std::vector<int> pool;
  pool.reserve(enb.total_prbs);
  for (int p = 0; p < enb.total_prbs; ++p) {
    if (enb.is_protected(p)) pool.push_back(p);
  }
  for (int p = 0; p < enb.total_prbs; ++p) {
    if (!enb.is_protected(p)) pool.push_back(p);
  }

  std::vector<std::size_t> by_quality(n);
  std::iota(by_quality.begin(), by_quality.end(), 0);
  std::stable_sort(by_quality.begin(), by_quality.end(), [&](std::size_t a, std::size_t b) {
    if (requests[a].quality != requests[b].quality) return requests[a].quality < requests[b].quality;
    return requests[a].id < requests[b].id;
  });

  std::vector<std::vector<int>> out(n);
  std::size_t next = 0;
  for (std::size_t i : by_quality) {
    for (int k = 0; k < count[i]; ++k) out[i].push_back(pool[next++]);
  }
  return out;
}

/// SINR of `victim` on one of its PRBs given everything radiated this step, dB.
inline double sinr_db(const StepActivity& activity, const VictimExposure& victim, int prb, double noise_mw) {
  const double signal = victim.gain[victim.serving] * activity.tx(victim.serving, prb);
  return 10.0 * std::log10(signal / (activity.interference_mw(victim, prb) + noise_mw));
}

namespace detail {

inline bool inside_hexagon(double dx, double dy, double apothem) {
  const double s = std::sqrt(3.0) / 2.0;
  return std::abs(dx) <= apothem && std::abs(0.5 * dx + s * dy) <= apothem &&
         std::abs(-0.5 * dx + s * dy) <= apothem;
}

inline Vec2 uniform_in_cell(const NetworkLayout& layout, int enb, Rng& rng) {
  const Vec2 c = layout.enb(enb).position;
  const double apothem = layout.inter_site_distance / 2.0;
  const double r = layout.cell_radius;
  std::uniform_real_distribution<double> u(-r, r);
  for (;;) {
    const double dx = u(rng);
    const double dy = u(rng);
    if (inside_hexagon(dx, dy, apothem)) return {c.x + dx, c.y + dy};
  }
}

}  // namespace detail

/// Radio state of one step: the allocation is placed into `activity` and
/// each session's `prbs` is refreshed.
inline StepActivity schedule(SimState& state, const SimContext& ctx) {
  const auto& layout = ctx.layout;
  const int n_enbs = static_cast<int>(layout.size());
  const int n_prbs = n_enbs ? layout.enbs.front().total_prbs : 0;
  StepActivity activity(n_enbs, n_prbs);

  std::vector<std::vector<std::size_t>> members(n_enbs);
  for (std::size_t i = 0; i < state.sessions.size(); ++i) members[state.sessions[i].serving].push_back(i);

  for (int e = 0; e < n_enbs; ++e) {
    std::vector<AllocationRequest> req;
    req.reserve(members[e].size());
    for (std::size_t i : members[e]) req.push_back({state.sessions[i].id, state.sessions[i].quality});
    const auto alloc = allocate_prbs(req, layout.enbs[e], ctx.traffic);
    for (std::size_t k = 0; k < members[e].size(); ++k) {
      auto& s = state.sessions[members[e][k]];
      s.prbs = alloc[k];
      for (int p : s.prbs) activity.tx(e, p) = layout.enbs[e].prb_power_mw(p);
    }
  }

  activity.victims.reserve(state.sessions.size());
  for (const auto& s : state.sessions) activity.victims.push_back({s.serving, s.prbs, s.gain});
  return activity;
}

/// Advance the simulation by one second.
///
/// Order within a step: Poisson arrivals per cell (serving cell by highest
/// RSRP, then admission), PRB allocation, per-PRB SINR and rate, file
/// progress and completions, interference accounting.
inline void step(SimState& state, const SimContext& ctx,
                 const std::function<void(const SimState&, const StepActivity&)>& observer = {}) {
  const auto& layout = ctx.layout;
  const auto& prop = ctx.propagation;
  const int n_enbs = static_cast<int>(layout.size());
  const double noise = prop.noise_mw();

  std::vector<long> active(n_enbs, 0);
  for (const auto& s : state.sessions) ++active[s.serving];

  std::normal_distribution<double> shadow(0.0, prop.shadowing_stddev);
  for (int cell = 0; cell < n_enbs; ++cell) {
    const double rate = ctx.traffic.rate_for(cell);
    if (rate <= 0.0) continue;
    const int arrivals = std::poisson_distribution<int>(rate)(state.rng);
    for (int a = 0; a < arrivals; ++a) {
      UserSession u;
      u.position = detail::uniform_in_cell(layout, cell, state.rng);
      u.shadowing_db.resize(n_enbs);
      u.gain.resize(n_enbs);
      std::vector<double> rsrp(n_enbs);
      std::vector<double> pilot(n_enbs);
      for (int j = 0; j < n_enbs; ++j) {
        u.shadowing_db[j] = prop.shadowing_stddev > 0.0 ? shadow(state.rng) : 0.0;
        const double d = distance(u.position, layout.enbs[j].position);
        u.gain[j] = dbm_to_mw(-pathloss_db(d, prop) + u.shadowing_db[j]);
        rsrp[j] = received_power_dbm(layout.enbs[j].max_power_dbm, d, u.shadowing_db[j], prop);
        pilot[j] = dbm_to_mw(rsrp[j]);
      }
      u.serving = static_cast<int>(std::max_element(rsrp.begin(), rsrp.end()) - rsrp.begin());
      const auto& enb = layout.enbs[u.serving];

      ++state.lifetime[u.serving].arrivals;
      if (state.window_open) ++state.window[u.serving].arrivals;

      const long free = enb.total_prbs - active[u.serving] * ctx.traffic.min_prbs_per_user;
      if (admit(rsrp[u.serving], static_cast<int>(std::max(free, 0L)), ctx.rsrp_threshold_dbm) ==
          Admission::Block) {
        ++state.lifetime[u.serving].blocks;
        if (state.window_open) ++state.window[u.serving].blocks;
        continue;
      }
      u.id = state.next_session_id++;
      u.arrival_time = state.time;
      u.remaining_bits = ctx.traffic.file_bits();
      u.quality = quality_metric(pilot, u.serving, noise);
      ++active[u.serving];
      state.sessions.push_back(std::move(u));
    }
  }

  const StepActivity activity = schedule(state, ctx);
  if (observer) observer(state, activity);

  const long now = state.time + 1;
  std::vector<UserSession> remaining;
  remaining.reserve(state.sessions.size());
  for (std::size_t i = 0; i < state.sessions.size(); ++i) {
    auto& s = state.sessions[i];
    double rate = 0.0;
    for (int p : s.prbs) rate += ctx.link.prb_rate(sinr_db(activity, activity.victims[i], p, noise));
    s.remaining_bits = std::max(0.0, s.remaining_bits - rate);
    if (s.remaining_bits > 0.0) {
      remaining.push_back(std::move(s));
      continue;
    }
    const double transfer = static_cast<double>(now - s.arrival_time);
    ++state.lifetime[s.serving].completions;
    state.lifetime[s.serving].transfer_time_sum += transfer;
    if (state.window_open) {
      ++state.window[s.serving].completions;
      state.window[s.serving].transfer_time_sum += transfer;
    }
  }

  if (state.window_open) state.interference.add(activity);

  state.sessions = std::move(remaining);
  state.time = now;
}

struct EnbKpi {
  int enb = 0;
  double alpha = 0.0;
  long arrivals = 0;
  long blocks = 0;
  long completions = 0;
  std::optional<double> bcr_pct;  // absent when no arrivals
  std::optional<double> ftt_s;    // absent when no completions
};

struct KpiReport {
  std::vector<EnbKpi> enbs;

  const EnbKpi& at(int enb) const { return enbs.at(enb); }
};

inline KpiReport make_report(const std::vector<EnbCounters>& counters, const NetworkLayout& layout) {
  KpiReport report;
  for (std::size_t e = 0; e < counters.size(); ++e) {
    const auto& c = counters[e];
    EnbKpi k;
    k.enb = static_cast<int>(e);
    k.alpha = layout.enbs[e].alpha;
    k.arrivals = c.arrivals;
    k.blocks = c.blocks;
    k.completions = c.completions;
    if (c.arrivals > 0) k.bcr_pct = 100.0 * static_cast<double>(c.blocks) / static_cast<double>(c.arrivals);
    if (c.completions > 0) k.ftt_s = c.transfer_time_sum / static_cast<double>(c.completions);
    report.enbs.push_back(k);
  }
  return report;
}

struct EpisodeResult {
  KpiReport kpis;
  InterferenceMatrix interference;
  std::vector<EnbCounters> lifetime;
  std::vector<long> active_at_end;
};

struct EpisodeOptions {
  long duration = 2500;
  long warmup = 500;
  std::uint64_t seed = 1;
};

/// Run one episode with the given alpha per eNB. KPI counters and the
/// interference accumulator cover [warmup, duration).
inline EpisodeResult run_episode(const SimContext& base, const std::vector<double>& alphas,
                                 const EpisodeOptions& opt,
                                 const std::function<void(const SimState&, const StepActivity&)>& observer = {}) {
  if (opt.warmup < 0 || opt.warmup >= opt.duration) {
    throw Error(ErrorCategory::InvalidArgument, "need 0 <= warmup < duration");
  }
  SimContext ctx = base;
  ctx.layout.set_alphas(alphas);
  ctx.validate();

  SimState state(ctx.layout.size(), opt.seed);
  while (state.time < opt.duration) {
    state.window_open = state.time >= opt.warmup;
    step(state, ctx, observer);
  }

  EpisodeResult out;
  out.kpis = make_report(state.window, ctx.layout);
  out.interference = state.interference.estimate();
  out.lifetime = state.lifetime;
  for (int e = 0; e < static_cast<int>(ctx.layout.size()); ++e) out.active_at_end.push_back(state.active_at(e));
  return out;
}

}  // namespace slah
