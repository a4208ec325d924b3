#include "posg/xcli/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "posg/scenarios/scenarios.hpp"
#include "posg/xcli/stats.hpp"

namespace posg {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_num(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::runtime_error("malformed number '" + s + "'");
  }
  return v;
}

std::size_t parse_count(const std::string& s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::runtime_error("malformed count '" + s + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string join_nums(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += num(v[i]);
  }
  return out;
}

std::vector<double> parse_nums(const std::string& s) {
  std::vector<double> out;
  for (const auto& x : split(s, ',')) out.push_back(parse_num(x));
  return out;
}

// Nested lists use ';' between groups; "-" marks an empty outer list so the
// column never vanishes.
std::string join_groups(const std::vector<std::vector<double>>& v) {
  if (v.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += join_nums(v[i]);
  }
  return out;
}

std::vector<std::vector<double>> parse_groups(const std::string& s) {
  std::vector<std::vector<double>> out;
  if (s == "-") return out;
  for (const auto& g : split(s, ';')) out.push_back(parse_nums(g));
  return out;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\t', ' ');
  return s;
}

}  // namespace

void write_record(const TrialRecord& r, std::ostream& out) {
  out << "# posg trial record\n";
  out << "# scenario = " << r.scenario << '\n';
  out << "# mode = " << to_string(r.mode) << '\n';
  out << "# seed = " << r.seed << '\n';
  out << "# players = " << r.players << '\n';
  out << "# aborted = " << (r.aborted ? 1 : 0) << '\n';
  out << "# diagnostic = " << one_line(r.diagnostic) << '\n';
  out << "# initial_state = " << join_nums(r.initial_state) << '\n';
  out << "# step_seconds = " << join_nums(r.step_seconds) << '\n';
  out << "# first_trace = ";
  for (std::size_t i = 0; i < r.first_trace.size(); ++i) {
    const TracePoint& p = r.first_trace[i];
    out << (i ? "," : "") << p.iteration << ':' << p.player << ':' << num(p.cost);
  }
  out << '\n';
  out << "t\tstate\tactions\tcosts\titerations\tsurprisal\tmean_step_seconds\tdegenerate\n";
  for (const StepRow& row : r.rows) {
    std::vector<std::vector<double>> iters;
    for (const auto& agent : row.iterations) {
      iters.emplace_back(agent.begin(), agent.end());
    }
    std::string surprisal = row.surprisal.empty() ? "-" : "";
    for (std::size_t i = 0; i < row.surprisal.size(); ++i) {
      const SurprisalEntry& e = row.surprisal[i];
      surprisal += (i ? "," : "") + std::to_string(e.agent) + ':' + std::to_string(e.target) +
                   ':' + num(e.value);
    }
    out << row.t << '\t' << join_nums(row.state) << '\t' << join_groups(row.actions) << '\t'
        << join_nums(row.costs) << '\t' << join_groups(iters) << '\t' << surprisal << '\t'
        << num(row.mean_step_seconds) << '\t' << (row.degenerate ? 1 : 0) << '\n';
  }
}

TrialRecord read_record(std::istream& in) {
  TrialRecord r;
  std::map<std::string, std::string> header;
  std::string line;
  bool table = false;
  while (std::getline(in, line)) {
    if (!table) {
      if (line.rfind("# ", 0) == 0) {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos) header[line.substr(2, eq - 2)] = line.substr(eq + 3);
        continue;
      }
      if (line.rfind("t\t", 0) != 0) {
        throw std::runtime_error("record: missing column header");
      }
      table = true;
      continue;
    }
    if (line.empty()) continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 8) {
      throw std::runtime_error("record: expected 8 columns, got " + std::to_string(cols.size()));
    }
    StepRow row;
    row.t = parse_count(cols[0]);
    row.state = parse_nums(cols[1]);
    row.actions = parse_groups(cols[2]);
    row.costs = parse_nums(cols[3]);
    for (const auto& g : parse_groups(cols[4])) {
      auto& agent = row.iterations.emplace_back();
      for (double v : g) agent.push_back(static_cast<std::size_t>(v));
    }
    if (cols[5] != "-") {
      for (const auto& e : split(cols[5], ',')) {
        const auto parts = split(e, ':');
        if (parts.size() != 3) throw std::runtime_error("record: bad surprisal entry");
        row.surprisal.push_back({parse_count(parts[0]), parse_count(parts[1]), parse_num(parts[2])});
      }
    }
    row.mean_step_seconds = parse_num(cols[6]);
    row.degenerate = cols[7] == "1";
    r.rows.push_back(std::move(row));
  }
  for (const char* key : {"scenario", "mode", "seed", "players", "aborted"}) {
    if (!header.contains(key)) {
      throw std::runtime_error(std::string("record: missing header field '") + key + "'");
    }
  }
  r.scenario = header["scenario"];
  r.mode = parse_brain_mode(header["mode"]);
  r.seed = parse_count(header["seed"]);
  r.players = parse_count(header["players"]);
  r.aborted = header["aborted"] == "1";
  r.diagnostic = header["diagnostic"];
  r.initial_state = parse_nums(header["initial_state"]);
  r.step_seconds = parse_nums(header["step_seconds"]);
  for (const auto& e : split(header["first_trace"], ',')) {
    const auto parts = split(e, ':');
    if (parts.size() != 3) throw std::runtime_error("record: bad trace entry");
    r.first_trace.push_back({parse_count(parts[0]), parse_count(parts[1]), parse_num(parts[2])});
  }
  return r;
}

void save_record(const TrialRecord& record, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write record " + path.string());
  write_record(record, out);
}

TrialRecord load_record(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read record " + path.string());
  try {
    return read_record(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::vector<TrialRecord> load_records(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".record") paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<TrialRecord> out;
  for (const auto& p : paths) out.push_back(load_record(p));
  return out;
}

std::vector<CostGroup> cost_groups(const Game& game) {
  const std::string name = game.name();
  if (name == "tagchain") {
    const std::size_t half = game.num_players() / 2;
    CostGroup pursuers{"pursuers", {}};
    CostGroup evaders{"evaders", {}};
    for (std::size_t i = 0; i < half; ++i) {
      pursuers.players.push_back(i);
      evaders.players.push_back(half + i);
    }
    return {pursuers, evaders};
  }
  if (name == "warehouse") {
    return {{"P1", {0}}, {"P2", {1}}};
  }
  return {{"pursuer", {0}}, {"evader", {1}}};
}

void write_summary(const SummaryTable& table, std::ostream& out) {
  out << "configuration\tgroup\ttrials\tmean_cost\tstd_error\tstep_seconds_mean\tstep_seconds_std\n";
  for (const SummaryRow& r : table) {
    out << r.configuration << '\t' << r.group << '\t' << r.trials << '\t' << num(r.mean) << '\t'
        << num(r.std_error) << '\t' << num(r.step_seconds_mean) << '\t' << num(r.step_seconds_std)
        << '\n';
  }
}

SummaryTable read_summary(std::istream& in) {
  SummaryTable table;
  std::string line;
  if (!std::getline(in, line) || line.rfind("configuration\t", 0) != 0) {
    throw std::runtime_error("summary: missing column header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line, '\t');
    if (c.size() != 7) throw std::runtime_error("summary: expected 7 columns");
    table.push_back({c[0], c[1], parse_count(c[2]), parse_num(c[3]), parse_num(c[4]),
                     parse_num(c[5]), parse_num(c[6])});
  }
  return table;
}

std::vector<SummaryRow> summarize(const Game& game, const std::string& configuration,
                                  const std::vector<TrialRecord>& records) {
  std::vector<double> seconds;
  for (const TrialRecord& r : records) {
    seconds.insert(seconds.end(), r.step_seconds.begin(), r.step_seconds.end());
  }
  std::vector<SummaryRow> out;
  for (const CostGroup& g : cost_groups(game)) {
    std::vector<double> costs;
    for (const TrialRecord& r : records) {
      const std::vector<double> totals = r.total_costs();
      double c = 0.0;
      for (std::size_t p : g.players) c += totals[p];
      costs.push_back(c / static_cast<double>(g.players.size()));
    }
    out.push_back({configuration, g.name, records.size(), stats::mean(costs),
                   stats::standard_error(costs), stats::mean(seconds), stats::stddev(seconds)});
  }
  return out;
}

std::vector<MatrixConfiguration> matrix_configurations(const Game& game) {
  const std::size_t n = game.num_players();
  const auto groups = cost_groups(game);
  const GatherMode modes[2] = {GatherMode::Passive, GatherMode::Active};
  std::vector<MatrixConfiguration> out;
  if (game.name() == "warehouse") {
    for (GatherMode m : modes) {
      out.push_back({"P2-" + to_string(m), {GatherMode::Active, m}});
    }
    return out;
  }
  for (GatherMode second : modes) {
    for (GatherMode first : modes) {
      MatrixConfiguration c;
      c.label = groups[0].name + "-" + to_string(first) + "_" + groups[1].name + "-" +
                to_string(second);
      c.gather.assign(n, first);
      for (std::size_t p : groups[1].players) c.gather[p] = second;
      out.push_back(std::move(c));
    }
  }
  return out;
}

namespace {

void write_echo(const ExperimentConfig& config) {
  std::filesystem::create_directories(config.output_dir);
  std::ofstream echo(config.output_dir / "config.echo");
  write_config(config, echo);
}

}  // namespace

MatrixResult run_matrix(const ExperimentConfig& config, bool write_files) {
  MatrixResult result;
  const auto probe = make_game(config.scenario, config.seed);
  result.configurations = matrix_configurations(*probe);
  result.records.resize(result.configurations.size());
  if (config.trials == 0) {
    result.warnings.push_back("trials = 0: nothing to run, summary is empty");
    if (write_files) {
      write_echo(config);
      std::ofstream out(config.output_dir / "summary.tsv");
      write_summary(result.table, out);
    }
    return result;
  }

  const std::size_t configs = result.configurations.size();
  const auto jobs = static_cast<std::ptrdiff_t>(configs * config.trials);
  std::vector<TrialRecord> records(static_cast<std::size_t>(jobs));
  std::vector<std::string> errors(static_cast<std::size_t>(jobs));
  if (write_files) write_echo(config);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t j = 0; j < jobs; ++j) {
    const std::size_t c = static_cast<std::size_t>(j) / config.trials;
    const std::size_t trial = static_cast<std::size_t>(j) % config.trials;
    const std::uint64_t seed = config.seed + trial;
    try {
      const auto game = make_game(config.scenario, seed);
      MpgpConfig m = mpgp_config(config);
      m.gather = result.configurations[c].gather;
      if (write_files && config.dump_particles && trial == 0) {
        const auto path = config.output_dir /
                          ("particles_" + result.configurations[c].label + ".txt");
        std::filesystem::remove(path);
        m.particle_dump = path;
      }
      records[static_cast<std::size_t>(j)] = run_episode(*game, m, seed);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(j)] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw std::runtime_error("trial failed: " + e);
  }

  if (write_files) std::filesystem::create_directories(config.output_dir / "records");
  for (std::size_t c = 0; c < configs; ++c) {
    auto& bucket = result.records[c];
    for (std::size_t t = 0; t < config.trials; ++t) {
      TrialRecord& r = records[c * config.trials + t];
      if (r.aborted) {
        result.warnings.push_back(result.configurations[c].label + " seed " +
                                  std::to_string(r.seed) + " aborted: " + r.diagnostic);
      }
      if (write_files) {
        char name[64];
        std::snprintf(name, sizeof name, "_trial%03zu.record", t);
        save_record(r, config.output_dir / "records" / (result.configurations[c].label + name));
      }
      bucket.push_back(std::move(r));
    }
    auto rows = summarize(*probe, result.configurations[c].label, bucket);
    result.table.insert(result.table.end(), rows.begin(), rows.end());
  }
  if (write_files) {
    std::ofstream out(config.output_dir / "summary.tsv");
    write_summary(result.table, out);
  }
  return result;
}

ExperimentConfig apply_sweep_value(ExperimentConfig config, const std::string& parameter,
                                   const std::string& value) {
  try {
    if (parameter == "t_future") {
      config.scenario.horizon.future = parse_count(value);
    } else if (parameter == "k_batch") {
      config.k_batch = parse_count(value);
      if (config.k_batch == 0) throw std::runtime_error("k_batch must be positive");
    } else if (parameter == "n_eq") {
      const auto parts = split(value, ':');
      config.n_eq.clear();
      for (const auto& p : parts) config.n_eq.push_back(parse_count(p));
      if (config.n_eq.size() == 1) {
        const auto probe = make_game(config.scenario, config.seed);
        config.n_eq.assign(probe->num_players(), config.n_eq[0]);
      }
      for (std::size_t n : config.n_eq) {
        if (n == 0) throw std::runtime_error("n_eq must be positive");
      }
    } else {
      throw ConfigError("cannot sweep '" + parameter + "' (expected t_future, k_batch or n_eq)");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("sweep value '" + value + "' for " + parameter + ": " + e.what());
  }
  return config;
}

double mean_surprisal(const TrialRecord& record, std::size_t agent) {
  double total = 0.0;
  std::size_t count = 0;
  for (const StepRow& row : record.rows) {
    for (const SurprisalEntry& e : row.surprisal) {
      if (e.agent == agent) {
        total += e.value;
        ++count;
      }
    }
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

std::vector<SweepRow> sweep(const ExperimentConfig& config, const std::string& parameter,
                            const std::vector<std::string>& values, bool write_files) {
  std::vector<ExperimentConfig> configs;
  for (const auto& v : values) configs.push_back(apply_sweep_value(config, parameter, v));
  const auto jobs = static_cast<std::ptrdiff_t>(values.size() * config.trials);
  std::vector<SweepRow> rows(static_cast<std::size_t>(jobs));
  std::vector<std::string> errors(static_cast<std::size_t>(jobs));
  if (write_files) write_echo(config);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t j = 0; j < jobs; ++j) {
    const std::size_t v = static_cast<std::size_t>(j) / config.trials;
    const std::size_t trial = static_cast<std::size_t>(j) % config.trials;
    const std::uint64_t seed = config.seed + trial;
    try {
      const ExperimentConfig& c = configs[v];
      const auto game = make_game(c.scenario, seed);
      const auto start = std::chrono::steady_clock::now();
      const TrialRecord record = run_episode(*game, mpgp_config(c), seed);
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      SweepRow& row = rows[static_cast<std::size_t>(j)];
      row.parameter = parameter;
      row.value = values[v];
      row.trial = trial;
      row.seed = seed;
      row.cost = record.total_costs().at(c.report_player);
      row.seconds_per_step = record.rows.empty() ? 0.0 : seconds / record.rows.size();
      row.step_seconds = stats::mean(record.step_seconds);
      row.distance = game->num_players() >= 2 ? mean_distance(*game, record, 0, 1) : 0.0;
      const std::size_t agents = c.mode == BrainMode::Shared ? 1 : game->num_players();
      for (std::size_t a = 0; a < agents; ++a) row.surprisal.push_back(mean_surprisal(record, a));
      if (record.aborted) errors[static_cast<std::size_t>(j)] = "aborted: " + record.diagnostic;
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(j)] = e.what();
    }
  }
  for (std::size_t j = 0; j < errors.size(); ++j) {
    if (!errors[j].empty()) {
      throw std::runtime_error("sweep " + parameter + "=" + values[j / config.trials] + " trial " +
                               std::to_string(j % std::max<std::size_t>(config.trials, 1)) +
                               ": " + errors[j]);
    }
  }
  if (write_files) {
    std::ofstream out(config.output_dir / ("sweep_" + parameter + ".tsv"));
    write_sweep(rows, out);
  }
  return rows;
}

void write_sweep(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "parameter\tvalue\ttrial\tseed\tcost\tseconds_per_step\tstep_seconds\tdistance\tsurprisal\n";
  for (const SweepRow& r : rows) {
    out << r.parameter << '\t' << r.value << '\t' << r.trial << '\t' << r.seed << '\t'
        << num(r.cost) << '\t' << num(r.seconds_per_step) << '\t' << num(r.step_seconds) << '\t'
        << num(r.distance) << '\t' << (r.surprisal.empty() ? "-" : join_nums(r.surprisal))
        << '\n';
  }
}

std::vector<SweepRow> read_sweep(std::istream& in) {
  std::vector<SweepRow> rows;
  std::string line;
  if (!std::getline(in, line) || line.rfind("parameter\t", 0) != 0) {
    throw std::runtime_error("sweep: missing column header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line, '\t');
    if (c.size() != 9) throw std::runtime_error("sweep: expected 9 columns");
    SweepRow r;
    r.parameter = c[0];
    r.value = c[1];
    r.trial = parse_count(c[2]);
    r.seed = parse_count(c[3]);
    r.cost = parse_num(c[4]);
    r.seconds_per_step = parse_num(c[5]);
    r.step_seconds = parse_num(c[6]);
    r.distance = parse_num(c[7]);
    if (c[8] != "-") r.surprisal = parse_nums(c[8]);
    rows.push_back(std::move(r));
  }
  return rows;
}

PlotKind parse_plot_kind(const std::string& text) {
  if (text == "trajectory") return PlotKind::Trajectory;
  if (text == "convergence") return PlotKind::Convergence;
  if (text == "surprisal") return PlotKind::Surprisal;
  if (text == "particle-cloud") return PlotKind::ParticleCloud;
  throw EmitError("unknown plot kind '" + text +
                  "' (expected trajectory, convergence, surprisal or particle-cloud)");
}

void emit_plot_data(const Game& game, const std::vector<TrialRecord>& records, PlotKind kind,
                    std::ostream& out, std::size_t player,
                    const std::filesystem::path& particle_dump) {
  switch (kind) {
    case PlotKind::Trajectory: {
      out << "seed t[step] player x[m] y[m]\n";
      for (const TrialRecord& r : records) {
        for (const StepRow& row : r.rows) {
          for (std::size_t p = 0; p < r.players; ++p) {
            const auto offset = game.position_offset(p);
            if (!offset) throw EmitError("trajectory: player has no planar position");
            if (row.state.size() < *offset + 2) throw EmitError("trajectory: state row too short");
            out << r.seed << ' ' << row.t << ' ' << p << ' ' << num(row.state[*offset]) << ' '
                << num(row.state[*offset + 1]) << '\n';
          }
        }
      }
      return;
    }
    case PlotKind::Convergence: {
      std::map<std::size_t, std::vector<double>> by_iter;
      for (const TrialRecord& r : records) {
        for (const TracePoint& p : r.first_trace) {
          if (p.player == player) by_iter[p.iteration].push_back(p.cost);
        }
      }
      if (by_iter.empty()) {
        throw EmitError("convergence: no record carries a first-step trace for player " +
                        std::to_string(player) + " (set record_first_trace = true)");
      }
      out << "iteration mean_cost[cost] stderr[cost]\n";
      for (const auto& [iter, costs] : by_iter) {
        out << iter << ' ' << num(stats::mean(costs)) << ' ' << num(stats::standard_error(costs))
            << '\n';
      }
      return;
    }
    case PlotKind::Surprisal: {
      std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::vector<double>> cells;
      for (const TrialRecord& r : records) {
        for (const StepRow& row : r.rows) {
          for (const SurprisalEntry& e : row.surprisal) {
            cells[{row.t, e.agent, e.target}].push_back(e.value);
          }
        }
      }
      if (cells.empty()) throw EmitError("surprisal: records hold no surprisal values");
      out << "t[step] agent target mean_nll[nats] stderr[nats]\n";
      for (const auto& [key, v] : cells) {
        out << std::get<0>(key) << ' ' << std::get<1>(key) << ' ' << std::get<2>(key) << ' '
            << num(stats::mean(v)) << ' ' << num(stats::standard_error(v)) << '\n';
      }
      return;
    }
    case PlotKind::ParticleCloud: {
      std::ifstream in(particle_dump);
      if (particle_dump.empty() || !in) {
        throw EmitError("particle-cloud: no particle dump found (set dump_particles = true)");
      }
      std::string line;
      if (!std::getline(in, line) || line.rfind("step particle player", 0) != 0) {
        throw EmitError("particle-cloud: dump has no header");
      }
      out << "step[step] particle player x[m] y[m] weight\n";
      while (std::getline(in, line)) out << line << '\n';
      return;
    }
  }
}

}  // namespace posg
