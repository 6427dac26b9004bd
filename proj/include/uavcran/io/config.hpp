#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "uavcran/orchestrator.hpp"
#include "uavcran/presets.hpp"

namespace uavcran::io {

enum class GainSource { Paper, Manual, Lqr };

/// Declarative scenario description as read from an INI-style config file.
/// Users are either listed explicitly or drawn from the scenario seed.
struct ScenarioConfig {
  // [channel]
  ChannelParams channel;
  LogBase log_base = LogBase::Bits;
  // [users]
  std::optional<int> user_count;
  double field = 100.0;
  std::vector<double> p_max{presets_power()};
  std::vector<Vector2> user_positions;
  std::vector<UserMove> schedule;
  // [uavs]
  double altitude = 50.0;
  std::vector<Vector2> uav_positions;
  // [control]
  GainSource gain_source = GainSource::Paper;
  double k1 = ControllerGains::paper().k1;
  double k2 = ControllerGains::paper().k2;
  double k3 = ControllerGains::paper().k3;
  std::optional<double> prefilter;
  Vector3 lqr_weights{1.0, 1.0, 1.0};
  double lqr_r = 1.0;
  double gravity = kGravity;
  bool allow_unstable = false;
  std::optional<double> mu;
  double v_ref = 5.0;
  SteeringSettings steering;
  // [timing]
  Timing timing;
  // [solver]
  SolverSettings solver;
  int max_users = kDefaultMaxUsers;
  bool warm_start = true;
  // [output]
  Method method = Method::Controlled;
  std::uint64_t seed = 1;
  bool plot = false;

  static double presets_power() { return kPaperLikePower; }

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"channel", {"alpha", "d0", "pl_d0_db", "sigma_shadow_db", "n_rx", "n_tx", "log_base"}},
      {"users", {"count", "field", "p_max", "positions", "schedule"}},
      {"uavs", {"altitude", "positions"}},
      {"control",
       {"gains", "k1", "k2", "k3", "p", "lqr_weights", "lqr_r", "gravity", "allow_unstable", "mu", "v_ref",
        "steering", "steering_eps"}},
      {"timing", {"dt", "sample", "end"}},
      {"solver", {"max_iters", "step0", "tol_obj", "tol_feas", "max_users", "warm_start"}},
      {"output", {"method", "seed", "plot"}},
  };
  return keys;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ValidationError(key + ": expected a number, got '" + t + "'");
  }
  if (used != t.size() || !std::isfinite(v)) throw ValidationError(key + ": expected a number, got '" + t + "'");
  return v;
}

inline long long parse_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(t, &used);
  } catch (const std::exception&) {
    throw ValidationError(key + ": expected an integer, got '" + t + "'");
  }
  if (used != t.size()) throw ValidationError(key + ": expected an integer, got '" + t + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true") return true;
  if (t == "false") return false;
  throw ValidationError(key + ": expected true or false, got '" + t + "'");
}

// Comma-separated entries, whitespace-separated fields per entry.
inline std::vector<std::vector<double>> parse_tuples(const std::string& key, const std::string& text,
                                                     std::size_t arity) {
  std::vector<std::vector<double>> out;
  std::stringstream ss(text);
  std::string entry;
  while (std::getline(ss, entry, ',')) {
    if (trim(entry).empty()) continue;
    std::istringstream fields(entry);
    std::vector<double> tuple;
    std::string f;
    while (fields >> f) tuple.push_back(parse_real(key, f));
    if (tuple.size() != arity)
      throw ValidationError(key + ": each entry needs " + std::to_string(arity) + " values, got '" + trim(entry) +
                            "'");
    out.push_back(std::move(tuple));
  }
  return out;
}

// Shortest text that reads back to the same double.
inline std::string num(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Parses and validates the INI text. Unknown sections or keys are rejected;
/// [users], [uavs] and [timing] are required.
inline ScenarioConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError(std::string("config syntax: ") + e.what());
  }
  const auto& known = detail::known_keys();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ValidationError("config: key '" + section + "' must be inside a section");
    const auto it = known.find(section);
    if (it == known.end()) throw ValidationError("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body)
      if (!it->second.contains(key)) throw ValidationError("config: unknown key " + section + "." + key);
  }
  for (const char* required : {"users", "uavs", "timing"})
    if (tree.find(required) == tree.not_found())
      throw ValidationError(std::string("config: missing required section [") + required + "]");

  ScenarioConfig c;
  auto get = [&](const std::string& section, const std::string& key) -> std::optional<std::string> {
    const auto node = tree.get_child_optional(boost::property_tree::ptree::path_type(section + "\x1f" + key, '\x1f'));
    if (!node) return std::nullopt;
    return detail::trim(node->data());
  };
  auto real = [&](const char* section, const char* key, double& target) {
    if (auto v = get(section, key)) target = detail::parse_real(std::string(section) + "." + key, *v);
  };
  auto integer = [&](const char* section, const char* key, int& target) {
    if (auto v = get(section, key)) target = static_cast<int>(detail::parse_int(std::string(section) + "." + key, *v));
  };
  auto boolean = [&](const char* section, const char* key, bool& target) {
    if (auto v = get(section, key)) target = detail::parse_bool(std::string(section) + "." + key, *v);
  };

  real("channel", "alpha", c.channel.alpha);
  real("channel", "d0", c.channel.d0);
  real("channel", "pl_d0_db", c.channel.pl_d0_db);
  real("channel", "sigma_shadow_db", c.channel.sigma_shadow_db);
  integer("channel", "n_rx", c.channel.n_rx);
  integer("channel", "n_tx", c.channel.n_tx);
  if (auto v = get("channel", "log_base")) {
    if (*v == "bits") c.log_base = LogBase::Bits;
    else if (*v == "nats") c.log_base = LogBase::Nats;
    else throw ValidationError("channel.log_base: expected bits or nats");
  }

  if (auto v = get("users", "count")) c.user_count = static_cast<int>(detail::parse_int("users.count", *v));
  real("users", "field", c.field);
  if (auto v = get("users", "p_max")) {
    c.p_max.clear();
    for (const auto& t : detail::parse_tuples("users.p_max", *v, 1)) c.p_max.push_back(t[0]);
  }
  if (auto v = get("users", "positions"))
    for (const auto& t : detail::parse_tuples("users.positions", *v, 2)) c.user_positions.emplace_back(t[0], t[1]);
  if (auto v = get("users", "schedule")) {
    for (const auto& t : detail::parse_tuples("users.schedule", *v, 4)) {
      if (t[1] != std::floor(t[1])) throw ValidationError("users.schedule: user index must be an integer");
      c.schedule.push_back({t[0], static_cast<int>(t[1]) - 1, {t[2], t[3], 0.0}});
    }
  }

  real("uavs", "altitude", c.altitude);
  if (auto v = get("uavs", "positions"))
    for (const auto& t : detail::parse_tuples("uavs.positions", *v, 2)) c.uav_positions.emplace_back(t[0], t[1]);

  if (auto v = get("control", "gains")) {
    if (*v == "paper") c.gain_source = GainSource::Paper;
    else if (*v == "manual") c.gain_source = GainSource::Manual;
    else if (*v == "lqr") c.gain_source = GainSource::Lqr;
    else throw ValidationError("control.gains: expected paper, manual or lqr");
  }
  real("control", "k1", c.k1);
  real("control", "k2", c.k2);
  real("control", "k3", c.k3);
  if (auto v = get("control", "p")) c.prefilter = detail::parse_real("control.p", *v);
  if (auto v = get("control", "lqr_weights")) {
    const auto w = detail::parse_tuples("control.lqr_weights", *v, 3);
    if (w.size() != 1) throw ValidationError("control.lqr_weights: expected three values");
    c.lqr_weights = {w[0][0], w[0][1], w[0][2]};
  }
  real("control", "lqr_r", c.lqr_r);
  real("control", "gravity", c.gravity);
  boolean("control", "allow_unstable", c.allow_unstable);
  if (auto v = get("control", "mu")) {
    if (*v == "auto") c.mu.reset();
    else c.mu = detail::parse_real("control.mu", *v);
  }
  real("control", "v_ref", c.v_ref);
  if (auto v = get("control", "steering")) {
    if (*v == "min_norm") c.steering.mode = Steering::MinNormActive;
    else if (*v == "subset") c.steering.mode = Steering::BindingSubset;
    else throw ValidationError("control.steering: expected min_norm or subset");
  }
  real("control", "steering_eps", c.steering.eps);

  real("timing", "dt", c.timing.dt);
  real("timing", "sample", c.timing.sample);
  real("timing", "end", c.timing.end);

  integer("solver", "max_iters", c.solver.max_iters);
  real("solver", "step0", c.solver.step0);
  real("solver", "tol_obj", c.solver.tol_obj);
  real("solver", "tol_feas", c.solver.tol_feas);
  integer("solver", "max_users", c.max_users);
  boolean("solver", "warm_start", c.warm_start);

  if (auto v = get("output", "method")) {
    if (*v == "controlled") c.method = Method::Controlled;
    else if (*v == "gradient") c.method = Method::Gradient;
    else throw ValidationError("output.method: expected controlled or gradient");
  }
  if (auto v = get("output", "seed")) {
    const long long s = detail::parse_int("output.seed", *v);
    if (s < 0) throw ValidationError("output.seed must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  }
  boolean("output", "plot", c.plot);

  if (c.uav_positions.empty()) throw ValidationError("uavs.positions: at least one UAV is required");
  if (c.user_positions.empty() && !c.user_count) throw ValidationError("users: give positions or count");
  if (c.user_count && !c.user_positions.empty() && *c.user_count != static_cast<int>(c.user_positions.size()))
    throw ValidationError("users.count does not match users.positions");
  if (c.user_count && *c.user_count < 1) throw ValidationError("users.count must be >= 1");
  if (!(c.field > 0.0)) throw ValidationError("users.field must be > 0");
  return c;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("config: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Canonical text form; parse_config(emit_config(c)) == c.
inline std::string emit_config(const ScenarioConfig& c) {
  using detail::num;
  std::ostringstream o;
  auto tuples = [](const std::vector<Vector2>& v) {
    std::string s;
    for (std::size_t j = 0; j < v.size(); ++j) s += (j ? ", " : "") + num(v[j].x()) + " " + num(v[j].y());
    return s;
  };
  o << "[channel]\n"
    << "alpha = " << num(c.channel.alpha) << "\n"
    << "d0 = " << num(c.channel.d0) << "\n"
    << "pl_d0_db = " << num(c.channel.pl_d0_db) << "\n"
    << "sigma_shadow_db = " << num(c.channel.sigma_shadow_db) << "\n"
    << "n_rx = " << c.channel.n_rx << "\n"
    << "n_tx = " << c.channel.n_tx << "\n"
    << "log_base = " << (c.log_base == LogBase::Bits ? "bits" : "nats") << "\n\n";
  o << "[users]\n";
  if (c.user_count) o << "count = " << *c.user_count << "\n";
  o << "field = " << num(c.field) << "\n";
  o << "p_max = ";
  for (std::size_t j = 0; j < c.p_max.size(); ++j) o << (j ? ", " : "") << num(c.p_max[j]);
  o << "\n";
  if (!c.user_positions.empty()) o << "positions = " << tuples(c.user_positions) << "\n";
  if (!c.schedule.empty()) {
    o << "schedule = ";
    for (std::size_t j = 0; j < c.schedule.size(); ++j) {
      const auto& m = c.schedule[j];
      o << (j ? ", " : "") << num(m.t) << " " << (m.user + 1) << " " << num(m.position.x) << " " << num(m.position.y);
    }
    o << "\n";
  }
  o << "\n[uavs]\n"
    << "altitude = " << num(c.altitude) << "\n"
    << "positions = " << tuples(c.uav_positions) << "\n\n";
  o << "[control]\n"
    << "gains = " << (c.gain_source == GainSource::Paper ? "paper" : c.gain_source == GainSource::Manual ? "manual" : "lqr")
    << "\n"
    << "k1 = " << num(c.k1) << "\n"
    << "k2 = " << num(c.k2) << "\n"
    << "k3 = " << num(c.k3) << "\n";
  if (c.prefilter) o << "p = " << num(*c.prefilter) << "\n";
  o << "lqr_weights = " << num(c.lqr_weights[0]) << " " << num(c.lqr_weights[1]) << " " << num(c.lqr_weights[2])
    << "\n"
    << "lqr_r = " << num(c.lqr_r) << "\n"
    << "gravity = " << num(c.gravity) << "\n"
    << "allow_unstable = " << (c.allow_unstable ? "true" : "false") << "\n"
    << "mu = " << (c.mu ? num(*c.mu) : std::string("auto")) << "\n"
    << "v_ref = " << num(c.v_ref) << "\n"
    << "steering = " << (c.steering.mode == Steering::MinNormActive ? "min_norm" : "subset") << "\n"
    << "steering_eps = " << num(c.steering.eps) << "\n\n";
  o << "[timing]\n"
    << "dt = " << num(c.timing.dt) << "\n"
    << "sample = " << num(c.timing.sample) << "\n"
    << "end = " << num(c.timing.end) << "\n\n";
  o << "[solver]\n"
    << "max_iters = " << c.solver.max_iters << "\n"
    << "step0 = " << num(c.solver.step0) << "\n"
    << "tol_obj = " << num(c.solver.tol_obj) << "\n"
    << "tol_feas = " << num(c.solver.tol_feas) << "\n"
    << "max_users = " << c.max_users << "\n"
    << "warm_start = " << (c.warm_start ? "true" : "false") << "\n\n";
  o << "[output]\n"
    << "method = " << method_name(c.method) << "\n"
    << "seed = " << c.seed << "\n"
    << "plot = " << (c.plot ? "true" : "false") << "\n";
  return o.str();
}

/// Resolves gains (LQR design if requested) and the user layout, then validates.
inline Scenario build_scenario(const ScenarioConfig& c) {
  Scenario s;
  s.channel = c.channel;
  s.log_base = c.log_base;
  s.seed = c.seed;
  if (!c.user_positions.empty()) {
    for (const auto& p : c.user_positions) s.users.push_back({p.x(), p.y(), 0.0});
  } else {
    s.users = draw_users(*c.user_count, c.field, c.seed);
  }
  if (c.p_max.size() == 1) s.p_max.assign(s.users.size(), c.p_max[0]);
  else if (c.p_max.size() == s.users.size()) s.p_max = c.p_max;
  else throw ValidationError("users.p_max: give one value or one per user");
  s.schedule = c.schedule;
  for (const auto& p : c.uav_positions) s.uavs.push_back({p.x(), p.y(), c.altitude});

  switch (c.gain_source) {
    case GainSource::Paper:
      s.gains = ControllerGains::paper();
      break;
    case GainSource::Manual:
      s.gains = {c.k1, c.k2, c.k3, 0.0};
      s.gains.p = c.prefilter ? *c.prefilter : c.k1;
      break;
    case GainSource::Lqr:
      try {
        s.gains = lqr_design(c.lqr_weights, c.lqr_r, c.gravity).gains;
      } catch (const DesignError& e) {
        throw ValidationError(std::string("control.lqr_weights: ") + e.what());
      }
      break;
  }
  if (c.prefilter && c.gain_source != GainSource::Manual) s.gains.p = *c.prefilter;
  s.gravity = c.gravity;
  s.allow_unstable = c.allow_unstable;
  s.timing = c.timing;
  s.method = c.method;
  s.mu = c.mu;
  s.v_ref = c.v_ref;
  s.steering = c.steering;
  s.solver = c.solver;
  s.max_users = c.max_users;
  s.warm_start = c.warm_start;
  s.validate();
  return s;
}

}  // namespace uavcran::io
