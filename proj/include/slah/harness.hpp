#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "slah/config.hpp"
#include "slah/csv.hpp"
#include "slah/error.hpp"
#include "slah/healer.hpp"
#include "slah/oracle.hpp"
#include "slah/seeding.hpp"
#include "slah/simulator.hpp"

namespace slah {

// ---------------------------------------------------------------------------
// Reference sweep

struct SweepRow {
  double alpha = 0.0;
  std::optional<double> mean_bcr;
  std::optional<double> mean_ftt;
};

/// {k step : k = 1 .. round(max / step)} restricted to [min, max].
inline std::vector<double> sweep_grid(double alpha_min, double alpha_max, double step) {
  if (!(step > 0.0)) throw Error(ErrorCategory::InvalidArgument, "sweep step must be positive");
  const long n = std::lround(std::floor(alpha_max / step + 1e-9));
  std::vector<double> out;
  for (long k = 1; k <= n; ++k) {
    const double a = static_cast<double>(k) * step;
    if (a + 1e-9 >= alpha_min) out.push_back(a);
  }
  return out;
}

/// Network means over the eNBs whose KPI is defined.
inline SweepRow network_means(double alpha, const KpiReport& r) {
  SweepRow row{alpha, std::nullopt, std::nullopt};
  double b = 0, f = 0;
  int nb = 0, nf = 0;
  for (const auto& k : r.enbs) {
    if (k.bcr_pct) b += *k.bcr_pct, ++nb;
    if (k.ftt_s) f += *k.ftt_s, ++nf;
  }
  if (nb) row.mean_bcr = b / nb;
  if (nf) row.mean_ftt = f / nf;
  return row;
}

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Every sweep point shares one episode seed (common random numbers), so the
/// curve differences reflect alpha rather than traffic realizations.
inline std::vector<SweepRow> sweep(const SimContext& ctx, const std::vector<double>& alphas, long duration,
                                   long warmup, std::uint64_t root_seed, int threads = 0) {
  std::vector<SweepRow> rows(alphas.size());
  const std::uint64_t seed = derive_seed(root_seed, 0, "sweep");
  parallel_for(alphas.size(), threads, [&](std::size_t i) {
    const std::vector<double> a(ctx.layout.size(), alphas[i]);
    const auto r = run_episode(ctx, a, {duration, warmup, seed});
    rows[i] = network_means(alphas[i], r.kpis);
  });
  return rows;
}

inline csv::Table sweep_table(const std::vector<SweepRow>& rows) {
  csv::Table t({"alpha", "mean_bcr", "mean_ftt"});
  for (const auto& r : rows) t.add({csv::num(r.alpha), csv::num(r.mean_bcr), csv::num(r.mean_ftt)});
  return t;
}

struct SweepMinima {
  std::optional<double> argmin_bcr;
  std::optional<double> argmin_ftt;
};

inline SweepMinima sweep_minima(const std::vector<SweepRow>& rows) {
  SweepMinima m;
  double best_b = std::numeric_limits<double>::infinity(), best_f = best_b;
  for (const auto& r : rows) {
    if (r.mean_bcr && *r.mean_bcr < best_b) best_b = *r.mean_bcr, m.argmin_bcr = r.alpha;
    if (r.mean_ftt && *r.mean_ftt < best_f) best_f = *r.mean_ftt, m.argmin_ftt = r.alpha;
  }
  return m;
}

/// Smallest alpha whose mean BCR and mean FTT are both within
/// `tolerance_pct` of their minima. The band is doubled once if empty.
inline double pick_reference(const std::vector<SweepRow>& rows, double tolerance_pct = 2.0) {
  if (rows.empty()) throw Error(ErrorCategory::InvalidArgument, "empty sweep table");
  double min_b = std::numeric_limits<double>::infinity(), min_f = min_b;
  for (const auto& r : rows) {
    if (r.mean_bcr) min_b = std::min(min_b, *r.mean_bcr);
    if (r.mean_ftt) min_f = std::min(min_f, *r.mean_ftt);
  }
  auto within = [](const std::optional<double>& v, double min, double tol) {
    if (!std::isfinite(min)) return true;  // KPI never defined: no constraint
    return v && *v <= min + std::abs(min) * tol / 100.0;
  };
  for (double tol : {tolerance_pct, 2.0 * tolerance_pct}) {
    std::optional<double> best;
    for (const auto& r : rows) {
      if (within(r.mean_bcr, min_b, tol) && within(r.mean_ftt, min_f, tol)) {
        if (!best || r.alpha < *best) best = r.alpha;
      }
    }
    if (best) return *best;
  }
  throw Error(ErrorCategory::EmptyFeasible, "no alpha lies within the tolerance band of both KPI minima");
}

// ---------------------------------------------------------------------------
// Faulty cell and zones

/// Competition ranks, worst first: rank = 1 + number of strictly worse values.
/// Absent values rank as best.
inline std::vector<int> descending_ranks(const std::vector<std::optional<double>>& v) {
  std::vector<int> ranks(v.size(), 1);
  const double lowest = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j].value_or(lowest) > v[i].value_or(lowest)) ++ranks[i];
    }
  }
  return ranks;
}

/// eNB with the smallest BCR-rank + FTT-rank sum; ties to the smallest id.
inline int select_faulty(const KpiReport& report) {
  if (report.enbs.empty()) throw Error(ErrorCategory::InvalidArgument, "empty KPI report");
  std::vector<std::optional<double>> bcr, ftt;
  for (const auto& k : report.enbs) {
    bcr.push_back(k.bcr_pct);
    ftt.push_back(k.ftt_s);
  }
  const auto rb = descending_ranks(bcr);
  const auto rf = descending_ranks(ftt);
  std::size_t best = 0;
  for (std::size_t i = 1; i < report.enbs.size(); ++i) {
    const int si = rb[i] + rf[i], sb = rb[best] + rf[best];
    if (si < sb || (si == sb && report.enbs[i].enb < report.enbs[best].enb)) best = i;
  }
  return report.enbs[best].enb;
}

inline std::optional<double> improvement_pct(const std::optional<double>& ref, const std::optional<double>& opt) {
  if (!ref || !opt || *ref == 0.0) return std::nullopt;
  return 100.0 * (*ref - *opt) / *ref;
}

struct ZoneRow {
  int enb = 0;
  std::string zone;  // "faulty", "ns1" or "ns2"
  std::optional<double> ref_bcr, opt_bcr, ref_ftt, opt_ftt;

  std::optional<double> bcr_improvement_pct() const { return improvement_pct(ref_bcr, opt_bcr); }
  std::optional<double> ftt_improvement_pct() const { return improvement_pct(ref_ftt, opt_ftt); }
};

struct ZoneReport {
  int faulty = 0;
  std::vector<int> ns1;
  std::vector<int> ns2;
  std::vector<ZoneRow> rows;  // faulty, then NS1, then NS2

  /// Mean per-eNB improvement over the rows whose zone is listed.
  std::optional<double> mean_improvement(const std::vector<std::string>& zones, bool bcr) const {
    double sum = 0;
    int n = 0;
    for (const auto& r : rows) {
      if (std::find(zones.begin(), zones.end(), r.zone) == zones.end()) continue;
      const auto v = bcr ? r.bcr_improvement_pct() : r.ftt_improvement_pct();
      if (v) sum += *v, ++n;
    }
    if (!n) return std::nullopt;
    return sum / n;
  }
};

inline ZoneReport make_zone_report(int faulty, const std::vector<int>& ns1, const std::vector<int>& ns2,
                                   const KpiReport& ref, const KpiReport& opt) {
  ZoneReport z{faulty, ns1, ns2, {}};
  auto add = [&](int e, const char* zone) {
    z.rows.push_back({e, zone, ref.at(e).bcr_pct, opt.at(e).bcr_pct, ref.at(e).ftt_s, opt.at(e).ftt_s});
  };
  add(faulty, "faulty");
  for (int e : ns1) add(e, "ns1");
  for (int e : ns2) add(e, "ns2");
  return z;
}

/// FTT_c + sum_j omega_j FTT_j from measured KPIs; NaN when any FTT is absent.
inline double measured_cost(const KpiReport& r, int faulty, const std::vector<int>& ns1,
                            const std::vector<double>& omega) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double c = r.at(faulty).ftt_s.value_or(nan);
  for (std::size_t k = 0; k < ns1.size(); ++k) c += omega[k] * r.at(ns1[k]).ftt_s.value_or(nan);
  return c;
}

// ---------------------------------------------------------------------------
// Persistence

inline csv::Table trace_table(const HealingState& st) {
  csv::Table t({"k", "phase", "kind", "enb_id", "alpha", "ftt_s", "bcr_pct", "cost", "feasible"});
  for (const auto& rec : st.trace) {
    for (int e : st.zone) {
      const auto& kpi = rec.kpis.at(e);
      t.add({std::to_string(rec.k), phase_name(rec.phase), "enb", std::to_string(e), csv::num(rec.alphas.at(e)),
             csv::num(kpi.ftt_s), csv::num(kpi.bcr_pct), "", ""});
    }
    t.add({std::to_string(rec.k), phase_name(rec.phase), "summary", std::to_string(st.s), csv::num(rec.alpha_s), "",
           "", csv::num(rec.predicted_cost), rec.feasible ? (*rec.feasible ? "1" : "0") : ""});
  }
  return t;
}

constexpr int kCurvePoints = 200;

/// Plot-ready data: (a) data points, (b) fitted curves, (c) reference vs
/// optimized bars per zone, (d) evaluation-zone KPIs in descending order.
inline void emit_plot_data(const HealingState& st, const ZoneReport* zones, const std::filesystem::path& dir) {
  csv::Table scatter({"enb_id", "kpi", "alpha_s", "alpha", "value"});
  for (int e : st.zone) {
    for (const auto& p : st.data.at(e)) {
      scatter.add({std::to_string(e), "ftt", csv::num(p.alpha_s), csv::num(p.alpha), csv::num(p.kpi.ftt_s)});
      scatter.add({std::to_string(e), "bcr", csv::num(p.alpha_s), csv::num(p.alpha), csv::num(p.kpi.bcr_pct)});
    }
  }
  scatter.write(dir / "scatter.csv");

  csv::Table curves({"enb_id", "kpi", "input", "x", "value"});
  if (st.models) {
    auto sample = [&](int e, const char* kpi, const char* input, const KpiModel& m) {
      for (int i = 1; i <= kCurvePoints; ++i) {
        const double x = static_cast<double>(i) / kCurvePoints;
        curves.add({std::to_string(e), kpi, input, csv::num(x), csv::num(m.predict(x))});
      }
    };
    sample(st.faulty, "ftt", "alpha_s", st.models->ftt_c);
    sample(st.faulty, "bcr", "alpha_s", st.models->bcr_c);
    for (std::size_t k = 1; k < st.zone.size(); ++k) {
      sample(st.zone[k], "ftt", "alpha", st.models->ftt[k - 1]);
      sample(st.zone[k], "bcr", "alpha", st.models->bcr[k - 1]);
    }
  }
  curves.write(dir / "curves.csv");

  csv::Table bars({"zone", "enb_id", "kpi", "reference", "optimized", "improvement_pct"});
  csv::Table sorted({"kpi", "condition", "rank", "enb_id", "value"});
  if (zones) {
    for (const auto& r : zones->rows) {
      if (r.zone == "ns2") continue;
      bars.add({r.zone, std::to_string(r.enb), "bcr", csv::num(r.ref_bcr), csv::num(r.opt_bcr),
                csv::num(r.bcr_improvement_pct())});
      bars.add({r.zone, std::to_string(r.enb), "ftt", csv::num(r.ref_ftt), csv::num(r.opt_ftt),
                csv::num(r.ftt_improvement_pct())});
    }
    for (const char* kpi : {"bcr", "ftt"}) {
      for (const char* cond : {"reference", "optimized"}) {
        std::vector<std::pair<double, int>> v;
        for (const auto& r : zones->rows) {
          const bool bcr = kpi[0] == 'b';
          const bool ref = cond[0] == 'r';
          const auto& val = bcr ? (ref ? r.ref_bcr : r.opt_bcr) : (ref ? r.ref_ftt : r.opt_ftt);
          if (val) v.emplace_back(*val, r.enb);
        }
        std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t i = 0; i < v.size(); ++i) {
          sorted.add({kpi, cond, std::to_string(i + 1), std::to_string(v[i].second), csv::num(v[i].first)});
        }
      }
    }
  }
  bars.write(dir / "zone_bars.csv");
  sorted.write(dir / "evaluation_sorted.csv");
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCategory::Io, "cannot write " + path.string());
  f << text;
}

inline nlohmann::json json_num(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

// ---------------------------------------------------------------------------
// Experiments

struct ReferenceSolution {
  double alpha = 0.5;
  std::vector<SweepRow> sweep;  // empty when configured directly
};

inline ReferenceSolution reference_solution(const ExperimentConfig& cfg, const SimContext& ctx) {
  if (cfg.reference_alpha) return {*cfg.reference_alpha, {}};
  ReferenceSolution ref;
  ref.sweep = sweep(ctx, sweep_grid(cfg.sweep_alpha_min, cfg.sweep_alpha_max, cfg.sweep_alpha_step), cfg.duration,
                    cfg.warmup, cfg.root_seed, cfg.threads);
  ref.alpha = pick_reference(ref.sweep, cfg.sweep_tolerance_pct);
  return ref;
}

inline InterferenceMatrix estimate_reference_matrix(const ExperimentConfig& cfg, const SimContext& ctx,
                                                    double alpha) {
  const std::vector<double> a(ctx.layout.size(), alpha);
  return run_episode(ctx, a, {cfg.matrix_duration, cfg.matrix_warmup, derive_seed(cfg.root_seed, 0, "matrix")})
      .interference;
}

struct HealResult {
  ReferenceSolution reference;
  InterferenceMatrix matrix;
  HealingState state;
  ZoneReport zones;
  KpiReport reference_kpis;
  KpiReport optimized_kpis;
  std::vector<double> omega;
  double reference_cost = 0.0;
  double optimized_cost = 0.0;
};

/// Reference solution, interference matrix, faulty-cell choice, the
/// healing loop against the simulator, and a final reference-vs-optimized
/// evaluation on a shared seed. Writes every artifact to `dir` if given.
inline HealResult heal(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& dir) {
  const SimContext ctx = cfg.context();
  HealResult out;
  out.reference = reference_solution(cfg, ctx);
  const double ref_alpha = out.reference.alpha;
  out.matrix = estimate_reference_matrix(cfg, ctx, ref_alpha);

  const std::vector<double> ref_alphas(ctx.layout.size(), ref_alpha);
  const EpisodeOptions eval{cfg.duration, cfg.warmup, derive_seed(cfg.root_seed, 0, "evaluate")};
  out.reference_kpis = run_episode(ctx, ref_alphas, eval).kpis;

  HealingConfig hc = cfg.slah;
  hc.faulty = cfg.faulty_enb ? *cfg.faulty_enb : select_faulty(out.reference_kpis);
  hc.ns1 = ctx.layout.first_tier(hc.faulty);
  hc.alpha_c = ref_alpha;
  const auto ns2 = ctx.layout.second_tier(hc.faulty);

  const EpisodeRunner runner = [&](const std::map<int, double>& zone_alphas, int k) {
    std::vector<double> a = ref_alphas;
    for (const auto& [e, v] : zone_alphas) a.at(e) = v;
    const auto r = run_episode(ctx, a, {cfg.duration, cfg.warmup, derive_seed(cfg.root_seed, k, "heal")});
    std::map<int, KpiObservation> kpis;
    for (const auto& [e, v] : zone_alphas) kpis[e] = {r.kpis.at(e).ftt_s, r.kpis.at(e).bcr_pct};
    return kpis;
  };
  out.state = slah_run(runner, hc, out.matrix);

  std::vector<double> opt_alphas = ref_alphas;
  for (const auto& [e, v] : out.state.trace.back().alphas) opt_alphas.at(e) = v;
  out.optimized_kpis = run_episode(ctx, opt_alphas, eval).kpis;

  out.zones = make_zone_report(hc.faulty, hc.ns1, ns2, out.reference_kpis, out.optimized_kpis);
  out.omega = weights(out.matrix.row(hc.faulty, hc.ns1));
  out.reference_cost = measured_cost(out.reference_kpis, hc.faulty, hc.ns1, out.omega);
  out.optimized_cost = measured_cost(out.optimized_kpis, hc.faulty, hc.ns1, out.omega);

  if (dir) {
    std::filesystem::create_directories(*dir);
    if (!out.reference.sweep.empty()) sweep_table(out.reference.sweep).write(*dir / "sweep.csv");
    csv::matrix_table(out.matrix).write(*dir / "interference_matrix.csv");
    csv::episode_table("reference", out.reference_kpis).write(*dir / "kpi_reference.csv");
    csv::episode_table("optimized", out.optimized_kpis).write(*dir / "kpi_optimized.csv");
    trace_table(out.state).write(*dir / "trace.csv");
    emit_plot_data(out.state, &out.zones, *dir);

    nlohmann::json per_enb = nlohmann::json::array();
    for (const auto& r : out.zones.rows) {
      per_enb.push_back({{"enb_id", r.enb},
                         {"zone", r.zone},
                         {"alpha", opt_alphas.at(r.enb)},
                         {"reference_bcr_pct", json_num(r.ref_bcr)},
                         {"optimized_bcr_pct", json_num(r.opt_bcr)},
                         {"bcr_improvement_pct", json_num(r.bcr_improvement_pct())},
                         {"reference_ftt_s", json_num(r.ref_ftt)},
                         {"optimized_ftt_s", json_num(r.opt_ftt)},
                         {"ftt_improvement_pct", json_num(r.ftt_improvement_pct())}});
    }
    const nlohmann::json report{
        {"reference_alpha", ref_alpha},
        {"faulty_enb", hc.faulty},
        {"most_coupled_enb", out.state.s},
        {"ns1", hc.ns1},
        {"ns2", ns2},
        {"converged", out.state.converged},
        {"iterations", out.state.iteration},
        {"converged_alpha_s", out.state.current_alpha_s},
        {"reference_cost", json_num(out.reference_cost)},
        {"optimized_cost", json_num(out.optimized_cost)},
        {"optimization_zone_bcr_improvement_pct", json_num(out.zones.mean_improvement({"faulty", "ns1"}, true))},
        {"optimization_zone_ftt_improvement_pct", json_num(out.zones.mean_improvement({"faulty", "ns1"}, false))},
        {"evaluation_zone_bcr_improvement_pct",
         json_num(out.zones.mean_improvement({"faulty", "ns1", "ns2"}, true))},
        {"evaluation_zone_ftt_improvement_pct",
         json_num(out.zones.mean_improvement({"faulty", "ns1", "ns2"}, false))},
        {"enbs", per_enb},
    };
    write_text(*dir / "report.json", report.dump(2) + "\n");
  }
  return out;
}

struct OracleHealResult {
  HealingState state;
  OptimizationResult truth;
};

/// Healing loop against the analytic KPI oracle instead of the simulator.
inline OracleHealResult oracle_heal(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& dir) {
  const auto& o = cfg.oracle;
  HealingConfig hc = cfg.slah;
  hc.faulty = o.faulty;
  hc.ns1 = o.ns1;

  OracleHealResult out;
  out.state = slah_run(o.runner(cfg.root_seed), hc, o.matrix());
  out.truth = o.optimum(hc.bcr_threshold, hc.alpha_grid_step);

  if (dir) {
    std::filesystem::create_directories(*dir);
    trace_table(out.state).write(*dir / "trace.csv");
    emit_plot_data(out.state, nullptr, *dir);
    const nlohmann::json report{
        {"converged", out.state.converged},
        {"iterations", out.state.iteration},
        {"converged_alpha_s", out.state.current_alpha_s},
        {"true_optimum_alpha_s", out.truth.alpha_s},
        {"true_optimum_cost", out.truth.cost},
        {"true_cost_at_converged", o.truth(hc.bcr_threshold).cost(out.state.current_alpha_s)},
    };
    write_text(*dir / "report.json", report.dump(2) + "\n");
  }
  return out;
}

}  // namespace slah
