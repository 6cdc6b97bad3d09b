#pragma once

// Flat key=value configuration files with [primary], [secondary], [mac] and
// [experiment] sections. Unknown sections or keys are errors. Durations are
// in seconds, rationals are written num/den, lists are comma separated.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cogwlan/config.hpp"

namespace cogwlan {

enum class RunMode { Analytic, Simulate, Validate };

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::Analytic: return "analytic";
    case RunMode::Simulate: return "simulate";
    case RunMode::Validate: return "validate";
  }
  return "?";
}

inline RunMode run_mode_from_string(const std::string& s) {
  if (s == "analytic") return RunMode::Analytic;
  if (s == "simulate") return RunMode::Simulate;
  if (s == "validate") return RunMode::Validate;
  throw std::invalid_argument("unknown mode: " + s);
}

struct ExperimentSettings {
  RunMode mode = RunMode::Analytic;
  std::uint64_t seed = 1;
  long frames = 200000;
  long warmup_frames = -1;  // negative: simulator default
  double gate = 0.03;
  int jobs = 1;
  long grid_cap = 4096;
  std::string out;  // empty: stdout

  std::vector<double> sweep_lambda_p;
  std::vector<int> sweep_n_s;
  std::vector<Ratio> sweep_ratio_r;
  std::vector<Striping> sweep_striping;
};

struct ExperimentPlan {
  ScenarioConfig base;
  ExperimentSettings settings;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (...) {
    throw std::invalid_argument("bad numeric value for " + key + ": " + v);
  }
}

inline long parse_long(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (...) {
    throw std::invalid_argument("bad integer value for " + key + ": " + v);
  }
}

inline std::uint64_t parse_u64(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const unsigned long long d = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (...) {
    throw std::invalid_argument("bad unsigned value for " + key + ": " + v);
  }
}

inline Ratio parse_ratio(const std::string& v, const std::string& key) {
  const auto slash = v.find('/');
  Ratio r;
  if (slash == std::string::npos) {
    r.num = parse_long(v, key);
    r.den = 1;
  } else {
    r.num = parse_long(trim(v.substr(0, slash)), key);
    r.den = parse_long(trim(v.substr(slash + 1)), key);
  }
  if (r.num <= 0 || r.den <= 0)
    throw std::invalid_argument("ratio must be positive for " + key + ": " + v);
  return r;
}

}  // namespace detail

inline ExperimentPlan parse_config_text(std::istream& in, const std::string& origin) {
  ExperimentPlan plan;
  std::string section;
  std::string line;
  int lineno = 0;

  auto fail = [&](const std::string& what) {
    throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section != "primary" && section != "secondary" && section != "mac" &&
          section != "experiment")
        fail("unknown section [" + section + "]");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) fail("empty key or value");
    if (section.empty()) fail("key outside of any section");

    ScenarioConfig& c = plan.base;
    ExperimentSettings& e = plan.settings;
    if (section == "primary") {
      if (key == "t_frame") c.t_frame = detail::parse_double(val, key);
      else if (key == "n_subchannels") c.n_subchannels = static_cast<int>(detail::parse_long(val, key));
      else if (key == "k_sym_dl") c.k_sym_dl = static_cast<int>(detail::parse_long(val, key));
      else if (key == "ratio_r") c.ratio_r = detail::parse_ratio(val, key);
      else if (key == "nu") c.nu = static_cast<int>(detail::parse_long(val, key));
      else if (key == "s_p") c.s_p = static_cast<int>(detail::parse_long(val, key));
      else if (key == "c_b") c.c_b = static_cast<int>(detail::parse_long(val, key));
      else if (key == "lambda_p") c.lambda_p = detail::parse_double(val, key);
      else if (key == "striping") c.striping = striping_from_string(val);
      else fail("unknown key in [primary]: " + key);
    } else if (section == "secondary") {
      if (key == "s_s") c.s_s = static_cast<int>(detail::parse_long(val, key));
      else if (key == "n_s") c.n_s = static_cast<int>(detail::parse_long(val, key));
      else if (key == "w0") c.w0 = static_cast<int>(detail::parse_long(val, key));
      else if (key == "m_stages") c.m_stages = static_cast<int>(detail::parse_long(val, key));
      else fail("unknown key in [secondary]: " + key);
    } else if (section == "mac") {
      if (key == "t_rts") c.t_rts = detail::parse_double(val, key);
      else if (key == "t_cts") c.t_cts = detail::parse_double(val, key);
      else if (key == "t_ack") c.t_ack = detail::parse_double(val, key);
      else if (key == "t_idle") c.t_idle = detail::parse_double(val, key);
      else if (key == "t_coll") c.t_coll = detail::parse_double(val, key);
      else fail("unknown key in [mac]: " + key);
    } else {  // experiment
      if (key == "mode") e.mode = run_mode_from_string(val);
      else if (key == "seed") e.seed = detail::parse_u64(val, key);
      else if (key == "frames") e.frames = detail::parse_long(val, key);
      else if (key == "warmup_frames") e.warmup_frames = detail::parse_long(val, key);
      else if (key == "gate") e.gate = detail::parse_double(val, key);
      else if (key == "jobs") e.jobs = static_cast<int>(detail::parse_long(val, key));
      else if (key == "grid_cap") e.grid_cap = detail::parse_long(val, key);
      else if (key == "out") e.out = val;
      else if (key == "sweep_lambda_p") {
        for (const auto& v : detail::split_list(val))
          e.sweep_lambda_p.push_back(detail::parse_double(v, key));
      } else if (key == "sweep_n_s") {
        for (const auto& v : detail::split_list(val))
          e.sweep_n_s.push_back(static_cast<int>(detail::parse_long(v, key)));
      } else if (key == "sweep_ratio_r") {
        for (const auto& v : detail::split_list(val))
          e.sweep_ratio_r.push_back(detail::parse_ratio(v, key));
      } else if (key == "sweep_striping") {
        for (const auto& v : detail::split_list(val))
          e.sweep_striping.push_back(striping_from_string(v));
      } else {
        fail("unknown key in [experiment]: " + key);
      }
    }
  }
  return plan;
}

inline ExperimentPlan load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file: " + path);
  return parse_config_text(in, path);
}

}  // namespace cogwlan
