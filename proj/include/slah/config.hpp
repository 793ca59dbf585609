#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "slah/error.hpp"
#include "slah/healer.hpp"
#include "slah/link_table.hpp"
#include "slah/oracle.hpp"
#include "slah/scenario.hpp"
#include "slah/simulator.hpp"

namespace slah {

/// Every experiment knob, with its default. Serialized as JSON with one
/// object per section; unknown keys are rejected.
///
///   scenario.rings                 2       hex rings around the centre site
///   scenario.inter_site_distance   2000    m
///   scenario.max_power_dbm         30      per PRB, protected subband
///   scenario.rsrp_threshold_dbm    -104    admission threshold (strict)
///   scenario.propagation.*                 see PropagationParams
///   link.floor_db                  -6.5    lowest SINR step
///   link.levels                    15      number of rate steps
///   link.attenuation               0.75    Shannon attenuation factor
///   link.max_efficiency            4.8     bit/s/Hz cap
///   traffic.arrival_rate           0.8     calls/s/cell, Poisson
///   traffic.file_size_kbits        6300
///   traffic.min_prbs_per_user      1
///   traffic.max_prbs_per_user      4
///   traffic.load_factors           []      [{"enb": id, "factor": x}], per-cell
///                                          arrival-rate multipliers
///   icic.default_alpha             0.5     alpha before any sweep
///   icic.total_prbs                24
///   icic.prbs_per_subband          8
///   icic.reference_alpha           null    null = pick from a sweep
///   episode.duration               2500    s
///   episode.warmup                 500     s
///   episode.matrix_duration        7000    s, interference estimation
///   episode.matrix_warmup          500     s
///   sweep.alpha_min                0.0125
///   sweep.alpha_max                1.0
///   sweep.alpha_step               0.0125
///   sweep.tolerance_pct            2.0     band around each KPI minimum
///   slah.faulty_enb                null    null = worst by rank-sum
///   slah.bcr_threshold             5.0     percent
///   slah.gamma                     0.3     signed, I' = I exp(-gamma B)
///   slah.init_alphas               [0.95, 0.73, 0.50, 0.28, 0.05]
///   slah.alpha_grid_step           0.0125
///   slah.convergence_tol           0.01
///   slah.convergence_hits          2
///   slah.max_iterations            10      optimization iterations
///   oracle.*                               see SyntheticOracle
///   seeds.root                     1
///   output.directory               "out"
///   threads                        0       0 = hardware concurrency
struct ExperimentConfig {
  int rings = 2;
  double inter_site_distance = 2000.0;
  double max_power_dbm = 30.0;
  double rsrp_threshold_dbm = kRsrpAdmissionDbm;
  PropagationParams propagation;

  double link_floor_db = -6.5;
  int link_levels = 15;
  double link_attenuation = 0.75;
  double link_max_efficiency = 4.8;

  TrafficParams traffic{.arrival_rate = 0.8};

  double default_alpha = 0.5;
  int total_prbs = 24;
  int prbs_per_subband = 8;
  std::optional<double> reference_alpha;

  long duration = 2500;
  long warmup = 500;
  long matrix_duration = 7000;
  long matrix_warmup = 500;

  double sweep_alpha_min = 0.0125;
  double sweep_alpha_max = 1.0;
  double sweep_alpha_step = 0.0125;
  double sweep_tolerance_pct = 2.0;

  std::optional<int> faulty_enb;
  HealingConfig slah;  // faulty and ns1 are resolved at run time

  SyntheticOracle oracle;

  std::uint64_t root_seed = 1;
  std::string output_directory = "out";
  int threads = 0;

  SimContext context() const {
    SimContext ctx;
    EnbConfig tmpl;
    tmpl.max_power_dbm = max_power_dbm;
    tmpl.alpha = default_alpha;
    tmpl.total_prbs = total_prbs;
    tmpl.prbs_per_subband = prbs_per_subband;
    ctx.layout = build_hex_grid(rings, inter_site_distance, tmpl);
    ctx.propagation = propagation;
    ctx.traffic = traffic;
    ctx.link = LinkTable::truncated_shannon(link_floor_db, link_levels, link_attenuation, link_max_efficiency);
    ctx.rsrp_threshold_dbm = rsrp_threshold_dbm;
    ctx.validate();
    return ctx;
  }
};

namespace detail {

/// Reads one JSON object, remembering which keys were consumed.
class SectionReader {
 public:
  SectionReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(ErrorCategory::Config, "'" + path_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCategory::Config, "bad value for '" + qualified(key) + "'");
    }
  }

  template <typename T>
  void get_optional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    if (it->is_null()) {
      out.reset();
      return;
    }
    T v{};
    get(key, v);
    out = v;
  }

  template <typename F>
  void section(const char* key, F&& read) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    SectionReader sub(*it, qualified(key));
    read(sub);
    sub.finish();
  }

  /// Array of objects, each read with `read(SectionReader&)`.
  template <typename F>
  void array(const char* key, F&& read) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_array()) throw Error(ErrorCategory::Config, "'" + qualified(key) + "' must be an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      SectionReader item((*it)[i], qualified(key) + "[" + std::to_string(i) + "]");
      read(item);
      item.finish();
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw Error(ErrorCategory::Config, "unknown key '" + qualified(key) + "'");
    }
  }

 private:
  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline nlohmann::json curve_json(const LogisticCurve& c) {
  return {{"lo", c.lo}, {"amplitude", c.amplitude}, {"b0", c.b0}, {"b1", c.b1}};
}

inline void read_curve(SectionReader& r, LogisticCurve& c) {
  r.get("lo", c.lo);
  r.get("amplitude", c.amplitude);
  r.get("b0", c.b0);
  r.get("b1", c.b1);
}

inline nlohmann::json load_factors_json(const std::map<int, double>& f) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [enb, factor] : f) out.push_back({{"enb", enb}, {"factor", factor}});
  return out;
}

template <typename T>
nlohmann::json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& c) {
  using nlohmann::json;
  const auto& p = c.propagation;
  const auto& t = c.traffic;
  const auto& s = c.slah;
  const auto& o = c.oracle;
  return json{
      {"scenario",
       {{"rings", c.rings},
        {"inter_site_distance", c.inter_site_distance},
        {"max_power_dbm", c.max_power_dbm},
        {"rsrp_threshold_dbm", c.rsrp_threshold_dbm},
        {"propagation",
         {{"pathloss_intercept", p.pathloss_intercept},
          {"pathloss_exponent_coeff", p.pathloss_exponent_coeff},
          {"reference_distance_m", p.reference_distance_m},
          {"shadowing_stddev", p.shadowing_stddev},
          {"noise_dbm_per_prb", p.noise_dbm_per_prb},
          {"min_distance_m", p.min_distance_m}}}}},
      {"link",
       {{"floor_db", c.link_floor_db},
        {"levels", c.link_levels},
        {"attenuation", c.link_attenuation},
        {"max_efficiency", c.link_max_efficiency}}},
      {"traffic",
       {{"arrival_rate", t.arrival_rate},
        {"file_size_kbits", t.file_size_kbits},
        {"min_prbs_per_user", t.min_prbs_per_user},
        {"max_prbs_per_user", t.max_prbs_per_user},
        {"load_factors", detail::load_factors_json(t.load_factors)}}},
      {"icic",
       {{"default_alpha", c.default_alpha},
        {"total_prbs", c.total_prbs},
        {"prbs_per_subband", c.prbs_per_subband},
        {"reference_alpha", detail::optional_json(c.reference_alpha)}}},
      {"episode",
       {{"duration", c.duration},
        {"warmup", c.warmup},
        {"matrix_duration", c.matrix_duration},
        {"matrix_warmup", c.matrix_warmup}}},
      {"sweep",
       {{"alpha_min", c.sweep_alpha_min},
        {"alpha_max", c.sweep_alpha_max},
        {"alpha_step", c.sweep_alpha_step},
        {"tolerance_pct", c.sweep_tolerance_pct}}},
      {"slah",
       {{"faulty_enb", detail::optional_json(c.faulty_enb)},
        {"bcr_threshold", s.bcr_threshold},
        {"gamma", s.gamma},
        {"init_alphas", s.init_alphas},
        {"alpha_grid_step", s.alpha_grid_step},
        {"convergence_tol", s.convergence_tol},
        {"convergence_hits", s.convergence_hits},
        {"max_iterations", s.max_iterations},
        {"alpha_c", s.alpha_c}}},
      {"oracle",
       {{"ftt_c", detail::curve_json(o.ftt_c)},
        {"bcr_c", detail::curve_json(o.bcr_c)},
        {"ftt_j", detail::curve_json(o.ftt_j)},
        {"bcr_j", detail::curve_json(o.bcr_j)},
        {"noise_fraction", o.noise_fraction},
        {"coupling", o.coupling}}},
      {"seeds", {{"root", c.root_seed}}},
      {"output", {{"directory", c.output_directory}}},
      {"threads", c.threads},
  };
}

inline ExperimentConfig from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  detail::SectionReader root(j, "");
  root.section("scenario", [&](auto& r) {
    r.get("rings", c.rings);
    r.get("inter_site_distance", c.inter_site_distance);
    r.get("max_power_dbm", c.max_power_dbm);
    r.get("rsrp_threshold_dbm", c.rsrp_threshold_dbm);
    r.section("propagation", [&](auto& p) {
      p.get("pathloss_intercept", c.propagation.pathloss_intercept);
      p.get("pathloss_exponent_coeff", c.propagation.pathloss_exponent_coeff);
      p.get("reference_distance_m", c.propagation.reference_distance_m);
      p.get("shadowing_stddev", c.propagation.shadowing_stddev);
      p.get("noise_dbm_per_prb", c.propagation.noise_dbm_per_prb);
      p.get("min_distance_m", c.propagation.min_distance_m);
    });
  });
  root.section("link", [&](auto& r) {
    r.get("floor_db", c.link_floor_db);
    r.get("levels", c.link_levels);
    r.get("attenuation", c.link_attenuation);
    r.get("max_efficiency", c.link_max_efficiency);
  });
  root.section("traffic", [&](auto& r) {
    r.get("arrival_rate", c.traffic.arrival_rate);
    r.get("file_size_kbits", c.traffic.file_size_kbits);
    r.get("min_prbs_per_user", c.traffic.min_prbs_per_user);
    r.get("max_prbs_per_user", c.traffic.max_prbs_per_user);
    r.array("load_factors", [&](auto& item) {
      int enb = 0;
      double factor = 1.0;
      item.get("enb", enb);
      item.get("factor", factor);
      c.traffic.load_factors[enb] = factor;
    });
  });
  root.section("icic", [&](auto& r) {
    r.get("default_alpha", c.default_alpha);
    r.get("total_prbs", c.total_prbs);
    r.get("prbs_per_subband", c.prbs_per_subband);
    r.get_optional("reference_alpha", c.reference_alpha);
  });
  root.section("episode", [&](auto& r) {
    r.get("duration", c.duration);
    r.get("warmup", c.warmup);
    r.get("matrix_duration", c.matrix_duration);
    r.get("matrix_warmup", c.matrix_warmup);
  });
  root.section("sweep", [&](auto& r) {
    r.get("alpha_min", c.sweep_alpha_min);
    r.get("alpha_max", c.sweep_alpha_max);
    r.get("alpha_step", c.sweep_alpha_step);
    r.get("tolerance_pct", c.sweep_tolerance_pct);
  });
  root.section("slah", [&](auto& r) {
    r.get_optional("faulty_enb", c.faulty_enb);
    r.get("bcr_threshold", c.slah.bcr_threshold);
    r.get("gamma", c.slah.gamma);
    r.get("init_alphas", c.slah.init_alphas);
    r.get("alpha_grid_step", c.slah.alpha_grid_step);
    r.get("convergence_tol", c.slah.convergence_tol);
    r.get("convergence_hits", c.slah.convergence_hits);
    r.get("max_iterations", c.slah.max_iterations);
    r.get("alpha_c", c.slah.alpha_c);
  });
  root.section("oracle", [&](auto& r) {
    r.section("ftt_c", [&](auto& s) { detail::read_curve(s, c.oracle.ftt_c); });
    r.section("bcr_c", [&](auto& s) { detail::read_curve(s, c.oracle.bcr_c); });
    r.section("ftt_j", [&](auto& s) { detail::read_curve(s, c.oracle.ftt_j); });
    r.section("bcr_j", [&](auto& s) { detail::read_curve(s, c.oracle.bcr_j); });
    r.get("noise_fraction", c.oracle.noise_fraction);
    r.get("coupling", c.oracle.coupling);
  });
  root.section("seeds", [&](auto& r) { r.get("root", c.root_seed); });
  root.section("output", [&](auto& r) { r.get("directory", c.output_directory); });
  root.get("threads", c.threads);
  root.finish();

  c.oracle.ns1.clear();
  for (std::size_t k = 0; k < c.oracle.coupling.size(); ++k) c.oracle.ns1.push_back(static_cast<int>(k) + 1);
  return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCategory::Config, std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

inline std::string serialize_config(const ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCategory::Io, "cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace slah
