#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "slah/simulator.hpp"

using namespace slah;

namespace {

SimContext small_context(double rate, int rings = 1, double isd = 500.0) {
  SimContext ctx;
  ctx.layout = build_hex_grid(rings, isd);
  ctx.traffic.arrival_rate = rate;
  return ctx;
}

}  // namespace

TEST(QualityMetric, Examples) {
  EXPECT_DOUBLE_EQ(quality_metric({1.0}, 0, 0.5), 2.0);
  EXPECT_NEAR(quality_metric({1.0, 1.0}, 0, 1e-15), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(quality_metric({2.0, 0.5, 0.3}, 0, 0.2), 2.0);
}

TEST(Admission, Examples) {
  EXPECT_EQ(admit(-100.0, 5), Admission::Admit);
  EXPECT_EQ(admit(-104.0, 5), Admission::Block);
  EXPECT_EQ(admit(-90.0, 0), Admission::Block);
}

TEST(Allocation, TwoSessionsBothInProtectedBand) {
  EnbConfig e;  // protected subband 0: PRBs 0..7
  TrafficParams t;
  const auto a = allocate_prbs({{0, 0.1}, {1, 5.0}}, e, t);
  ASSERT_EQ(a[0].size(), 4u);
  ASSERT_EQ(a[1].size(), 4u);
  for (int p : a[0]) EXPECT_TRUE(e.is_protected(p));
  for (int p : a[1]) EXPECT_TRUE(e.is_protected(p));
  EXPECT_EQ(a[0], (std::vector<int>{0, 1, 2, 3}));
}

TEST(Allocation, WorstSessionsFillProtectedBandFirst) {
  EnbConfig e;
  e.protected_subband = 2;
  TrafficParams t;
  const auto a = allocate_prbs({{0, 0.1}, {1, 0.2}, {2, 9.9}}, e, t);
  for (int k = 0; k < 2; ++k) {
    ASSERT_EQ(a[k].size(), 4u);
    for (int p : a[k]) EXPECT_TRUE(e.is_protected(p));
  }
  ASSERT_EQ(a[2].size(), 4u);
  for (int p : a[2]) EXPECT_FALSE(e.is_protected(p));
}

TEST(Allocation, FullLoadOnePrbEach) {
  EnbConfig e;
  TrafficParams t;
  std::vector<AllocationRequest> req;
  for (int i = 0; i < 24; ++i) req.push_back({i, 0.1 * (24 - i)});
  const auto a = allocate_prbs(req, e, t);
  std::set<int> used;
  for (const auto& v : a) {
    ASSERT_EQ(v.size(), 1u);
    used.insert(v[0]);
  }
  EXPECT_EQ(used.size(), 24u);
}

TEST(Allocation, ExtrasGoFirstComeFirstServed) {
  EnbConfig e;
  TrafficParams t;
  // 10 sessions: 10 minimum PRBs, 14 extras; ids 0..3 get 3 extras, id 4 gets 2
  std::vector<AllocationRequest> req;
  for (int i = 9; i >= 0; --i) req.push_back({i, 1.0 + i});
  const auto a = allocate_prbs(req, e, t);
  for (std::size_t k = 0; k < req.size(); ++k) {
    const long id = req[k].id;
    const std::size_t expect = id < 4 ? 4 : (id == 4 ? 3 : 1);
    EXPECT_EQ(a[k].size(), expect) << "id " << id;
  }
}

TEST(Sinr, NoInterfererIsSnr) {
  StepActivity act(2, 24);
  act.tx(0, 5) = 10.0;
  VictimExposure v{0, {5}, {1e-9, 1e-9}};
  EXPECT_NEAR(sinr_db(act, v, 5, 1e-10), 10.0 * std::log10(1e-8 / 1e-10), 1e-12);
}

TEST(Sinr, HalvingInterfererPowerGainsThreeDb) {
  StepActivity full(2, 24), half(2, 24);
  full.tx(0, 12) = half.tx(0, 12) = 1.0;
  full.tx(1, 12) = 1.0;
  half.tx(1, 12) = 0.5;
  VictimExposure v{0, {12}, {1.0, 0.1}};
  const double d = sinr_db(half, v, 12, 1e-15) - sinr_db(full, v, 12, 1e-15);
  EXPECT_NEAR(d, 10.0 * std::log10(2.0), 1e-9);
}

TEST(Sinr, SymmetricMidpointIsZeroDb) {
  StepActivity act(2, 24);
  act.tx(0, 3) = act.tx(1, 3) = 1.0;
  VictimExposure v{0, {3}, {0.3, 0.3}};
  EXPECT_NEAR(sinr_db(act, v, 3, 1e-18), 0.0, 1e-9);
}

TEST(Sinr, MonotoneInInterfererAlpha) {
  StepActivity act(2, 24);
  act.tx(0, 10) = 1.0;
  VictimExposure v{0, {10}, {1e-9, 4e-10}};
  double prev = -1e9;
  for (double a = 1.0; a > 0.01; a -= 0.1) {
    act.tx(1, 10) = a;
    const double s = sinr_db(act, v, 10, 1e-12);
    EXPECT_GT(s, prev);
    prev = s;
  }
}

TEST(LinkTable, FloorAndCap) {
  const auto t = LinkTable::truncated_shannon();
  EXPECT_EQ(t.throughput(-20.0, 4), 0.0);
  EXPECT_EQ(t.steps().size(), 15u);
  EXPECT_NEAR(t.max_prb_rate(), 4.8 * kPrbBandwidthHz, 1e-6);
  EXPECT_DOUBLE_EQ(t.throughput(40.0, 3), 3 * t.max_prb_rate());
  EXPECT_THROW(t.throughput(10.0, 0), Error);
  double prev = 0.0;
  for (double s = -10.0; s < 30.0; s += 0.25) {
    EXPECT_GE(t.prb_rate(s), prev);
    prev = t.prb_rate(s);
  }
}

TEST(Step, NoTrafficOnlyAdvancesTime) {
  const auto ctx = small_context(0.0);
  SimState st(ctx.layout.size(), 7);
  step(st, ctx);
  EXPECT_EQ(st.time, 1);
  EXPECT_TRUE(st.sessions.empty());
  for (const auto& c : st.lifetime) EXPECT_EQ(c, EnbCounters{});
}

TEST(Step, SingleUserCompletesInClosedFormTime) {
  auto ctx = small_context(0.0);
  ctx.propagation.shadowing_stddev = 0.0;
  const auto& layout = ctx.layout;
  const Vec2 pos{120.0, 40.0};

  UserSession u;
  u.id = 0;
  u.serving = 0;
  u.position = pos;
  u.remaining_bits = ctx.traffic.file_bits();
  u.quality = 1.0;
  for (const auto& e : layout.enbs) {
    u.shadowing_db.push_back(0.0);
    u.gain.push_back(std::pow(10.0, -pathloss_db(distance(pos, e.position), ctx.propagation) / 10.0));
  }

  // alone in the network: 4 protected PRBs at full power, no interference
  const double snr_db =
      10.0 * std::log10(u.gain[0] * dbm_to_mw(layout.enbs[0].max_power_dbm) / ctx.propagation.noise_mw());
  const double rate = 4 * ctx.link.prb_rate(snr_db);
  ASSERT_GT(rate, 0.0);
  const long expected = static_cast<long>(std::ceil(ctx.traffic.file_bits() / rate));

  SimState st(layout.size(), 1);
  st.window_open = true;
  st.sessions.push_back(u);
  long steps = 0;
  while (!st.sessions.empty() && steps < 100000) {
    step(st, ctx);
    ++steps;
  }
  EXPECT_EQ(steps, expected);
  EXPECT_EQ(st.window[0].completions, 1);
  EXPECT_DOUBLE_EQ(st.window[0].transfer_time_sum, static_cast<double>(expected));
}

TEST(Episode, ZeroTrafficLeavesKpisAbsent) {
  const auto ctx = small_context(0.0);
  const auto r = run_episode(ctx, std::vector<double>(7, 0.5), {100, 10, 3});
  for (const auto& k : r.kpis.enbs) {
    EXPECT_FALSE(k.bcr_pct);
    EXPECT_FALSE(k.ftt_s);
  }
}

TEST(Episode, WindowCoversDurationMinusWarmup) {
  const auto ctx = small_context(0.0);
  long open = 0;
  run_episode(ctx, std::vector<double>(7, 0.5), {2500, 500, 3},
              [&](const SimState& s, const StepActivity&) { open += s.window_open ? 1 : 0; });
  EXPECT_EQ(open, 2000);
}

TEST(Episode, ConservationOfSessions) {
  for (double rate : {0.3, 1.0, 3.0}) {
    const auto ctx = small_context(rate, 2, 1000.0);
    const auto r = run_episode(ctx, std::vector<double>(19, 0.4), {300, 50, 11});
    for (std::size_t e = 0; e < r.lifetime.size(); ++e) {
      const auto& c = r.lifetime[e];
      EXPECT_EQ(c.arrivals, c.blocks + c.completions + r.active_at_end[e]) << "rate " << rate << " eNB " << e;
    }
  }
}

TEST(Episode, Deterministic) {
  const auto ctx = small_context(1.0, 2, 1000.0);
  const std::vector<double> a(19, 0.6);
  const auto r1 = run_episode(ctx, a, {200, 20, 99});
  const auto r2 = run_episode(ctx, a, {200, 20, 99});
  EXPECT_EQ(r1.lifetime, r2.lifetime);
  EXPECT_EQ(r1.interference, r2.interference);
  EXPECT_EQ(r1.active_at_end, r2.active_at_end);
  const auto r3 = run_episode(ctx, a, {200, 20, 100});
  EXPECT_NE(r1.lifetime, r3.lifetime);
}

TEST(Episode, PrbsExclusiveAndWithinLimits) {
  const auto ctx = small_context(2.0, 2, 1000.0);
  long checked = 0;
  run_episode(ctx, std::vector<double>(19, 0.5), {150, 10, 5}, [&](const SimState& s, const StepActivity&) {
    std::vector<std::set<int>> used(19);
    std::vector<int> count(19, 0);
    for (const auto& u : s.sessions) {
      ASSERT_GE(u.prbs.size(), 1u);
      ASSERT_LE(u.prbs.size(), 4u);
      for (int p : u.prbs) {
        EXPECT_TRUE(used[u.serving].insert(p).second) << "PRB " << p << " shared in eNB " << u.serving;
        ++count[u.serving];
      }
    }
    for (int c : count) EXPECT_LE(c, 24);
    ++checked;
  });
  EXPECT_EQ(checked, 150);
}

TEST(Episode, InterferenceMatchesReplayOfObservedSteps) {
  const auto ctx = small_context(1.5, 1, 500.0);
  std::vector<StepActivity> window;
  const auto r = run_episode(ctx, std::vector<double>(7, 0.3), {120, 20, 8},
                             [&](const SimState& s, const StepActivity& a) {
                               if (s.window_open) window.push_back(a);
                             });
  const auto expect = oracle::replay_interference(window);
  for (std::size_t c = 0; c < 7; ++c) {
    for (std::size_t j = 0; j < 7; ++j) EXPECT_EQ(r.interference.at(c, j), expect[c][j]) << c << "," << j;
  }
}

TEST(Episode, RejectsBadWindow) {
  const auto ctx = small_context(0.1);
  EXPECT_THROW(run_episode(ctx, std::vector<double>(7, 0.5), {100, 100, 1}), Error);
  EXPECT_THROW(run_episode(ctx, std::vector<double>(7, 0.0), {100, 10, 1}), Error);
}
