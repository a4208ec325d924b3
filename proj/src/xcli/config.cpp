#include "posg/xcli/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace posg {
namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    out.push_back(trim(item));
  }
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

struct BadValue {};

double to_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc{} || ptr != end) throw BadValue{};
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc{} || ptr != end) throw BadValue{};
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw BadValue{};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F f, const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += f(v[i]);
  }
  return out;
}

template <class T, class F>
std::vector<T> parse_list(const std::string& s, F f) {
  std::vector<T> out;
  if (s.empty()) return out;
  for (const std::string& item : split(s, ',')) out.push_back(f(item));
  return out;
}

Point to_point(const std::string& s) {
  const auto parts = split(s, ' ');
  std::vector<std::string> nums;
  for (const auto& p : parts)
    if (!p.empty()) nums.push_back(p);
  if (nums.size() != 2) throw BadValue{};
  return {to_double(nums[0]), to_double(nums[1])};
}

std::string point_text(const Point& p) { return fmt(p[0]) + " " + fmt(p[1]); }

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> parse;
  std::function<std::string(const ExperimentConfig&)> format;
};

#define POSG_DOUBLE(key, member)                                                      \
  {key, {[](ExperimentConfig& c, const std::string& s) { c.member = to_double(s); }, \
         [](const ExperimentConfig& c) { return fmt(c.member); }}}
#define POSG_SIZE(key, member)                                                        \
  {key, {[](ExperimentConfig& c, const std::string& s) {                              \
           c.member = static_cast<decltype(c.member)>(to_u64(s));                     \
         },                                                                           \
         [](const ExperimentConfig& c) { return std::to_string(c.member); }}}
#define POSG_BOOL(key, member)                                                        \
  {key, {[](ExperimentConfig& c, const std::string& s) { c.member = to_bool(s); },   \
         [](const ExperimentConfig& c) { return std::string(c.member ? "true" : "false"); }}}
#define POSG_SIZES(key, member)                                                       \
  {key, {[](ExperimentConfig& c, const std::string& s) {                              \
           c.member = parse_list<std::size_t>(s, [](const std::string& x) {           \
             return static_cast<std::size_t>(to_u64(x));                              \
           });                                                                        \
         },                                                                           \
         [](const ExperimentConfig& c) {                                              \
           return join(c.member, [](std::size_t x) { return std::to_string(x); });    \
         }}}
#define POSG_DOUBLES(key, member)                                                     \
  {key, {[](ExperimentConfig& c, const std::string& s) {                              \
           c.member = parse_list<double>(s, to_double);                               \
         },                                                                           \
         [](const ExperimentConfig& c) { return join(c.member, fmt); }}}
#define POSG_POINT(key, member)                                                       \
  {key, {[](ExperimentConfig& c, const std::string& s) { c.member = to_point(s); },  \
         [](const ExperimentConfig& c) { return point_text(c.member); }}}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"scenario",
       {[](ExperimentConfig& c, const std::string& s) {
          if (s != "tag" && s != "tagchain" && s != "hideseek" && s != "warehouse") throw BadValue{};
          c.scenario.name = s;
        },
        [](const ExperimentConfig& c) { return c.scenario.name; }}},
      {"mode",
       {[](ExperimentConfig& c, const std::string& s) {
          try {
            c.mode = parse_brain_mode(s);
          } catch (const std::invalid_argument&) {
            throw BadValue{};
          }
        },
        [](const ExperimentConfig& c) { return to_string(c.mode); }}},
      {"gather",
       {[](ExperimentConfig& c, const std::string& s) {
          c.gather = parse_list<GatherMode>(s, [](const std::string& x) {
            try {
              return parse_gather_mode(x);
            } catch (const std::invalid_argument&) {
              throw BadValue{};
            }
          });
        },
        [](const ExperimentConfig& c) {
          return join(c.gather, [](GatherMode m) { return to_string(m); });
        }}},
      POSG_SIZE("t_past", scenario.horizon.past),
      POSG_SIZE("t_future", scenario.horizon.future),
      POSG_SIZE("players", scenario.players),
      POSG_SIZE("k_all", k_all),
      POSG_SIZE("k_batch", k_batch),
      POSG_SIZE("k_eval", k_eval),
      POSG_DOUBLE("gamma", gamma),
      POSG_SIZES("n_eq", n_eq),
      POSG_SIZE("max_iters", max_iters),
      POSG_SIZE("warm_iters", warm_iters),
      POSG_DOUBLE("eps_tol", eps_tol),
      POSG_DOUBLE("learning_rate", learning_rate),
      POSG_SIZES("hidden", hidden),
      POSG_SIZE("steps", steps),
      POSG_SIZE("trials", trials),
      POSG_SIZE("seed", seed),
      POSG_BOOL("common_agent_seeds", common_agent_seeds),
      POSG_SIZE("report_player", report_player),
      POSG_BOOL("record_first_trace", record_first_trace),
      POSG_DOUBLE("resample_ess_fraction", resample_ess_fraction),
      POSG_BOOL("dump_particles", dump_particles),
      {"output_dir",
       {[](ExperimentConfig& c, const std::string& s) {
          if (s.empty()) throw BadValue{};
          c.output_dir = s;
        },
        [](const ExperimentConfig& c) { return c.output_dir.string(); }}},
      POSG_DOUBLE("play_radius", scenario.play_radius),
      POSG_DOUBLE("boundary_weight", scenario.boundary_weight),
      POSG_DOUBLE("fov", scenario.fov),
      POSG_DOUBLE("sigma2_base", scenario.sigma2_base),
      POSG_DOUBLE("c_scale", scenario.c_scale),
      POSG_DOUBLE("init_sigma", scenario.init_sigma),
      {"spawn",
       {[](ExperimentConfig& c, const std::string& s) {
          if (s == "normal") c.scenario.spawn = SpawnMode::Normal;
          else if (s == "two") c.scenario.spawn = SpawnMode::TwoSpawn;
          else throw BadValue{};
        },
        [](const ExperimentConfig& c) {
          return std::string(c.scenario.spawn == SpawnMode::TwoSpawn ? "two" : "normal");
        }}},
      POSG_POINT("spawn_east", scenario.spawn_east),
      POSG_POINT("spawn_west", scenario.spawn_west),
      {"obstacles",
       {[](ExperimentConfig& c, const std::string& s) {
          c.scenario.obstacles = parse_list<Obstacle>(s, [](const std::string& x) {
            std::istringstream in(x);
            std::string a, b, r, extra;
            in >> a >> b >> r;
            if (r.empty() || (in >> extra)) throw BadValue{};
            return Obstacle{{to_double(a), to_double(b)}, to_double(r)};
          });
        },
        [](const ExperimentConfig& c) {
          return join(c.scenario.obstacles, [](const Obstacle& o) {
            return point_text(o.center) + " " + fmt(o.radius);
          });
        }}},
      POSG_DOUBLE("occlusion_sharpness", scenario.occlusion_sharpness),
      POSG_DOUBLES("v_max", scenario.v_max),
      POSG_DOUBLES("accel_max", scenario.accel_max),
      POSG_DOUBLE("alpha", scenario.alpha),
      POSG_DOUBLE("beta", scenario.beta),
      POSG_DOUBLE("eta1", scenario.eta1),
      POSG_DOUBLE("eta2", scenario.eta2),
      POSG_POINT("station", scenario.station),
      {"tasks",
       {[](ExperimentConfig& c, const std::string& s) {
          c.scenario.tasks = parse_list<Point>(s, to_point);
        },
        [](const ExperimentConfig& c) { return join(c.scenario.tasks, point_text); }}},
      POSG_SIZE("task_count", scenario.task_count),
      POSG_DOUBLE("obs_density_floor", scenario.obs_density_floor),
  };
  return table;
}

#undef POSG_DOUBLE
#undef POSG_SIZE
#undef POSG_BOOL
#undef POSG_SIZES
#undef POSG_DOUBLES
#undef POSG_POINT

void validate(const ExperimentConfig& c, const std::string& origin) {
  auto fail = [&](const std::string& what) { throw ConfigError(origin + ": " + what); };
  if (c.gamma < 0.0 || c.gamma > 1.0) fail("gamma must lie in [0, 1]");
  if (c.k_batch == 0) fail("k_batch must be positive");
  if (c.k_all == 0) fail("k_all must be positive");
  for (std::size_t n : c.n_eq) {
    if (n == 0) fail("n_eq entries must be positive");
    if (n > c.k_all) fail("n_eq cannot exceed k_all");
  }
  if (c.eps_tol < 0.0) fail("eps_tol must be non-negative");
  if (!(c.learning_rate > 0.0)) fail("learning_rate must be positive");
  if (c.resample_ess_fraction < 0.0 || c.resample_ess_fraction > 1.0)
    fail("resample_ess_fraction must lie in [0, 1]");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(number);
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = fields().find(key);
    if (it == fields().end()) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
    try {
      it->second.parse(config, value);
    } catch (const BadValue&) {
      throw ConfigError(where + ": invalid value for key '" + key + "': '" + value + "'");
    }
  }
  validate(config, origin);
  return config;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path.string() + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path.string());
}

void write_config(const ExperimentConfig& config, std::ostream& out) {
  for (const auto& [key, field] : fields()) {
    out << key << " = " << field.format(config) << '\n';
  }
}

std::string config_echo(const ExperimentConfig& config) {
  std::ostringstream out;
  write_config(config, out);
  return out.str();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [key, field] : fields()) out.push_back(key);
  return out;
}

MpgpConfig mpgp_config(const ExperimentConfig& config) {
  MpgpConfig m;
  m.mode = config.mode;
  m.gather = config.gather;
  m.n_eq = config.n_eq;
  m.k_all = config.k_all;
  m.gamma = config.gamma;
  m.solver.eps_tol = config.eps_tol;
  m.solver.max_iters = config.max_iters;
  m.solver.k_batch = config.k_batch;
  m.solver.k_eval = config.k_eval;
  m.warm_iters = config.warm_iters;
  m.adam.learning_rate = config.learning_rate;
  m.hidden = config.hidden;
  m.steps = config.steps;
  m.common_agent_seeds = config.common_agent_seeds;
  m.record_first_trace = config.record_first_trace;
  m.resample_ess_fraction = config.resample_ess_fraction;
  return m;
}

}  // namespace posg
