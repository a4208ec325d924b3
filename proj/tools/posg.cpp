// posg: run trial batteries, sweeps, oracle checks and plot-data export.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "posg/oracles/oracles.hpp"
#include "posg/scenarios/scenarios.hpp"
#include "posg/xcli/config.hpp"
#include "posg/xcli/harness.hpp"
#include "posg/xcli/stats.hpp"

namespace {

using namespace posg;

ExperimentConfig load(const std::string& path) {
  return path.empty() ? ExperimentConfig{} : parse_config(path);
}

std::vector<std::string> split_values(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_run(const std::string& config_path, std::optional<std::size_t> trials) {
  ExperimentConfig config = load(config_path);
  if (trials) config.trials = *trials;
  const MatrixResult result = run_matrix(config);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  write_summary(result.table, std::cout);
  std::cerr << "wrote " << (config.output_dir / "summary.tsv").string() << '\n';
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& parameter,
              const std::string& values_text, bool grid) {
  const ExperimentConfig config = load(config_path);
  std::vector<std::string> values = split_values(values_text);
  if (values.empty()) throw ConfigError("sweep: no values given");
  if (grid) {
    if (parameter != "n_eq") throw ConfigError("--grid applies to n_eq only");
    std::vector<std::string> pairs;
    for (const auto& a : values)
      for (const auto& b : values) pairs.push_back(a + ":" + b);
    values = pairs;
  }
  const std::vector<SweepRow> rows = sweep(config, parameter, values);

  std::printf("%-10s %14s %10s %14s %12s %10s\n", "value", "mean_cost", "stderr", "s_per_step",
              "distance", "surprisal");
  std::vector<double> xs, ys;
  for (const auto& v : values) {
    std::vector<double> cost, secs, dist, nll;
    for (const SweepRow& r : rows) {
      if (r.value != v) continue;
      cost.push_back(r.cost);
      secs.push_back(r.seconds_per_step);
      dist.push_back(r.distance);
      if (!r.surprisal.empty()) nll.push_back(r.surprisal[0]);
      if (!grid) {
        xs.push_back(std::stod(v));
        ys.push_back(r.cost);
      }
    }
    std::printf("%-10s %14.6g %10.4g %14.6g %12.6g %10.4g\n", v.c_str(), stats::mean(cost),
                stats::standard_error(cost), stats::mean(secs), stats::mean(dist),
                stats::mean(nll));
  }
  if (!grid && values.size() >= 2) {
    const auto s = stats::spearman(xs, ys);
    std::printf("spearman rho %.4f p %.4g\n", s.statistic, s.p_value);
  }
  return 0;
}

int cmd_gradcheck(std::size_t programs, std::uint64_t seed, const std::string& scenario,
                  double tolerance) {
  std::vector<std::string> names = {"tag", "tagchain", "hideseek", "warehouse"};
  if (scenario != "all") names = {scenario};
  bool ok = true;
  for (const auto& name : names) {
    ScenarioConfig config;
    config.name = name;
    const auto report = oracles::gradcheck_scenario(config, programs, seed);
    const bool pass = report.max_error < tolerance;
    ok = ok && pass;
    std::printf("%-10s programs %zu  max relative error %.3e  %.1fs  %s\n", name.c_str(),
                report.programs, report.max_error, report.seconds, pass ? "ok" : "FAILED");
  }
  return ok ? 0 : 1;
}

int cmd_beliefcheck(std::size_t particles, std::size_t steps, std::uint64_t seed,
                    double tolerance) {
  const auto report = oracles::belief_check(particles, steps, seed);
  std::printf("step  z  exact     particle\n");
  for (std::size_t t = 0; t < steps; ++t) {
    std::printf("%4zu  %d  %.6f  %.6f\n", t + 1, report.observations[t], report.exact[t],
                report.particle[t]);
  }
  std::printf("max total variation %.4g (tolerance %.4g)\n", report.max_tv, tolerance);
  return report.max_tv < tolerance ? 0 : 1;
}

int cmd_emit(const std::string& kind_text, const std::string& records_dir,
             const std::string& output, std::size_t player, const std::string& dump) {
  const PlotKind kind = parse_plot_kind(kind_text);
  std::vector<TrialRecord> records;
  if (kind != PlotKind::ParticleCloud) {
    records = load_records(records_dir);
    if (records.empty()) throw EmitError("no .record files in " + records_dir);
  }
  ScenarioConfig scenario;
  if (!records.empty()) scenario.name = records.front().scenario;
  if (!records.empty() && scenario.name == "tagchain") scenario.players = records.front().players;
  const auto game = make_game(scenario);
  std::ofstream out(output);
  if (!out) throw EmitError("cannot write " + output);
  emit_plot_data(*game, records, kind, out, player, dump);
  std::cerr << "wrote " << output << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planner for partially observable trajectory games"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::size_t> trials;
  auto* run = app.add_subcommand("run", "Run the active/passive trial matrix");
  run->add_option("-c,--config", config_path, "Experiment config file");
  run->add_option("--trials", trials, "Override the trial count");

  std::string parameter, values;
  bool grid = false;
  auto* sw = app.add_subcommand("sweep", "Sweep t_future, k_batch or n_eq");
  sw->add_option("-c,--config", config_path, "Experiment config file");
  sw->add_option("-p,--param", parameter, "Parameter to sweep")->required();
  sw->add_option("-v,--values", values, "Comma-separated values (n_eq accepts a:b)")->required();
  sw->add_flag("--grid", grid, "n_eq only: every pair of the values for the two players");

  std::size_t programs = 100;
  std::uint64_t seed = 1;
  std::string scenario = "all";
  double grad_tol = 1e-4;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of rollout gradients");
  gc->add_option("--programs", programs, "Random rollout programs per scenario");
  gc->add_option("--seed", seed, "Seed");
  gc->add_option("--scenario", scenario, "Scenario name or 'all'");
  gc->add_option("--tolerance", grad_tol, "Maximum relative error");

  std::size_t particles = 10000, steps = 5;
  double tv_tol = 0.02;
  auto* bc = app.add_subcommand("beliefcheck", "Particle update against exact enumeration");
  bc->add_option("--particles", particles, "Particle count");
  bc->add_option("--steps", steps, "Filter steps");
  bc->add_option("--seed", seed, "Seed");
  bc->add_option("--tolerance", tv_tol, "Maximum total variation");

  std::string kind, records_dir, output, dump;
  std::size_t player = 0;
  auto* em = app.add_subcommand("emit", "Write plot data from trial records");
  em->add_option("-k,--kind", kind, "trajectory, convergence, surprisal or particle-cloud")
      ->required();
  em->add_option("-r,--records", records_dir, "Directory of .record files");
  em->add_option("-o,--output", output, "Output file")->required();
  em->add_option("--player", player, "Player whose convergence trace is written");
  em->add_option("--dump", dump, "Particle dump written by a run with dump_particles = true");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, trials);
    if (sw->parsed()) return cmd_sweep(config_path, parameter, values, grid);
    if (gc->parsed()) return cmd_gradcheck(programs, seed, scenario, grad_tol);
    if (bc->parsed()) return cmd_beliefcheck(particles, steps, seed, tv_tol);
    if (em->parsed()) return cmd_emit(kind, records_dir, output, player, dump);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const EmitError& e) {
    std::cerr << "emit error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
