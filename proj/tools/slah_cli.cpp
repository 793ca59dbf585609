// Command-line front end for the healing experiments.
//
//   slah config                      print the default configuration
//   slah simulate                    one episode at a uniform alpha
//   slah sweep                       reference-solution sweep
//   slah matrix                      interference-matrix estimation
//   slah fit --input data.csv        logistic fit of (x, y) samples
//   slah heal                        full healing run on the simulator
//   slah oracle-heal                 healing run on the analytic KPI oracle
//
// Failures exit nonzero and print one line: "error: <category>: <message>".

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "slah/config.hpp"
#include "slah/csv.hpp"
#include "slah/harness.hpp"
#include "slah/statlearn.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<long> duration;
  std::optional<long> warmup;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "experiment configuration (JSON)");
  cmd->add_option("--seed", o.seed, "root seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--duration", o.duration, "episode length, seconds");
  cmd->add_option("--warmup", o.warmup, "discarded warm-up, seconds");
}

slah::ExperimentConfig resolve(const CommonOptions& o) {
  slah::ExperimentConfig cfg = o.config_path.empty() ? slah::ExperimentConfig{} : slah::load_config(o.config_path);
  if (o.seed) cfg.root_seed = *o.seed;
  if (!o.out.empty()) cfg.output_directory = o.out;
  if (o.duration) cfg.duration = *o.duration;
  if (o.warmup) cfg.warmup = *o.warmup;
  return cfg;
}

fs::path out_dir(const slah::ExperimentConfig& cfg) {
  fs::path dir = cfg.output_directory;
  fs::create_directories(dir);
  return dir;
}

std::vector<slah::Sample> read_samples(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw slah::Error(slah::ErrorCategory::Io, "cannot read " + path.string());
  std::vector<slah::Sample> samples;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = slah::csv::split(line);
    if (fields.size() < 2) throw slah::Error(slah::ErrorCategory::Io, "expected two columns: " + line);
    try {
      samples.push_back({std::stod(fields[0]), std::stod(fields[1])});
    } catch (const std::exception&) {
      if (!first) throw slah::Error(slah::ErrorCategory::Io, "not a number: " + line);
    }
    first = false;
  }
  return samples;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Statistical-learning automated healing of a soft-reuse ICIC parameter"};
  app.require_subcommand(1);

  CommonOptions common;

  auto* config_cmd = app.add_subcommand("config", "print the configuration with every default filled in");
  add_common(config_cmd, common);

  auto* simulate = app.add_subcommand("simulate", "run one episode");
  add_common(simulate, common);
  std::optional<double> sim_alpha;
  simulate->add_option("--alpha", sim_alpha, "alpha for every eNB (default icic.default_alpha)");

  auto* sweep_cmd = app.add_subcommand("sweep", "sweep a uniform alpha over the whole network");
  add_common(sweep_cmd, common);
  std::optional<double> a_min, a_max, a_step;
  sweep_cmd->add_option("--alpha-min", a_min);
  sweep_cmd->add_option("--alpha-max", a_max);
  sweep_cmd->add_option("--alpha-step", a_step);

  auto* matrix_cmd = app.add_subcommand("matrix", "estimate the interference matrix");
  add_common(matrix_cmd, common);
  std::optional<double> matrix_alpha;
  matrix_cmd->add_option("--alpha", matrix_alpha, "alpha for every eNB (default: reference alpha)");

  auto* fit_cmd = app.add_subcommand("fit", "fit a logistic KPI model to a two-column CSV (x, y)");
  std::string fit_input, fit_output;
  fit_cmd->add_option("--input", fit_input, "CSV with x,y rows; an optional header is skipped")->required();
  fit_cmd->add_option("--out", fit_output, "write the model record here instead of stdout");

  auto* heal_cmd = app.add_subcommand("heal", "run the healing loop on the simulator");
  add_common(heal_cmd, common);

  auto* oracle_cmd = app.add_subcommand("oracle-heal", "run the healing loop on the synthetic KPI oracle");
  add_common(oracle_cmd, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (config_cmd->parsed()) {
      std::cout << slah::serialize_config(resolve(common));
    } else if (simulate->parsed()) {
      const auto cfg = resolve(common);
      const auto ctx = cfg.context();
      const std::vector<double> alphas(ctx.layout.size(), sim_alpha.value_or(cfg.default_alpha));
      const auto r = slah::run_episode(ctx, alphas, {cfg.duration, cfg.warmup, slah::derive_seed(cfg.root_seed, 0, "simulate")});
      const auto dir = out_dir(cfg);
      slah::csv::episode_table("simulate", r.kpis).write(dir / "episode.csv");
      slah::csv::matrix_table(r.interference).write(dir / "interference_matrix.csv");
      std::cout << "wrote " << (dir / "episode.csv").string() << "\n";
    } else if (sweep_cmd->parsed()) {
      auto cfg = resolve(common);
      if (a_min) cfg.sweep_alpha_min = *a_min;
      if (a_max) cfg.sweep_alpha_max = *a_max;
      if (a_step) cfg.sweep_alpha_step = *a_step;
      const auto ctx = cfg.context();
      const auto rows = slah::sweep(ctx, slah::sweep_grid(cfg.sweep_alpha_min, cfg.sweep_alpha_max, cfg.sweep_alpha_step),
                                    cfg.duration, cfg.warmup, cfg.root_seed, cfg.threads);
      const auto dir = out_dir(cfg);
      slah::sweep_table(rows).write(dir / "sweep.csv");
      const auto minima = slah::sweep_minima(rows);
      std::cout << "argmin_bcr " << slah::csv::num(minima.argmin_bcr) << "\n"
                << "argmin_ftt " << slah::csv::num(minima.argmin_ftt) << "\n"
                << "reference_alpha " << slah::csv::num(slah::pick_reference(rows, cfg.sweep_tolerance_pct)) << "\n";
    } else if (matrix_cmd->parsed()) {
      auto cfg = resolve(common);
      if (common.duration) cfg.matrix_duration = *common.duration;
      if (common.warmup) cfg.matrix_warmup = *common.warmup;
      const auto ctx = cfg.context();
      const double alpha = matrix_alpha ? *matrix_alpha : slah::reference_solution(cfg, ctx).alpha;
      const auto m = slah::estimate_reference_matrix(cfg, ctx, alpha);
      const auto dir = out_dir(cfg);
      slah::csv::matrix_table(m).write(dir / "interference_matrix.csv");
      std::cout << "wrote " << (dir / "interference_matrix.csv").string() << "\n";
    } else if (fit_cmd->parsed()) {
      const auto samples = read_samples(fit_input);
      const auto m = slah::fit(samples);
      const nlohmann::json record{{"beta0", m.beta0},         {"beta1", m.beta1},
                                  {"y_lo", m.y_lo},           {"y_hi", m.y_hi},
                                  {"residual_rms", m.residual_rms}, {"n_samples", m.n_samples}};
      if (fit_output.empty()) {
        std::cout << record.dump(2) << "\n";
      } else {
        slah::write_text(fit_output, record.dump(2) + "\n");
      }
    } else if (heal_cmd->parsed()) {
      const auto cfg = resolve(common);
      const auto dir = out_dir(cfg);
      const auto r = slah::heal(cfg, dir);
      std::cout << fmt::format("faulty eNB {}  reference alpha {}  converged alpha_s {}  ({} iterations{})\n",
                               r.state.faulty, slah::csv::num(r.reference.alpha),
                               slah::csv::num(r.state.current_alpha_s), r.state.iteration,
                               r.state.converged ? "" : ", not converged")
                << "wrote " << (dir / "report.json").string() << "\n";
    } else if (oracle_cmd->parsed()) {
      const auto cfg = resolve(common);
      const auto dir = out_dir(cfg);
      const auto r = slah::oracle_heal(cfg, dir);
      std::cout << fmt::format("converged alpha_s {}  true optimum {}  ({} iterations{})\n",
                               slah::csv::num(r.state.current_alpha_s), slah::csv::num(r.truth.alpha_s),
                               r.state.iteration, r.state.converged ? "" : ", not converged");
    }
  } catch (const slah::Error& e) {
    std::cerr << "error: " << slah::category_name(e.category()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
