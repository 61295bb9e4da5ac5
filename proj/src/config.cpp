#include "ddfc/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>

#include "ddfc/errors.hpp"

namespace ddfc {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(std::string_view key, std::string_view v) {
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

long long to_int(std::string_view key, std::string_view v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(v) + "'");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(std::string(key) + ": expected true or false, got '" + std::string(v) + "'");
}

using Setter = std::function<void(ExperimentConfig&, std::string_view, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    auto real = [&t](const char* name, double ExperimentConfig::*field) {
      t[name] = [field](ExperimentConfig& c, std::string_view k, std::string_view v) {
        c.*field = to_double(k, v);
      };
    };
    auto plant = [&t](const char* name, double MassOnCarParams::*field) {
      t[name] = [field](ExperimentConfig& c, std::string_view k, std::string_view v) {
        c.plant.*field = to_double(k, v);
      };
    };
    auto optional = [&t](const char* name, std::optional<double> ExperimentConfig::*field) {
      t[name] = [field](ExperimentConfig& c, std::string_view k, std::string_view v) {
        if (v == "auto") {
          (c.*field).reset();
        } else {
          c.*field = to_double(k, v);
        }
      };
    };
    plant("m1", &MassOnCarParams::m1);
    plant("m2", &MassOnCarParams::m2);
    plant("k", &MassOnCarParams::k);
    plant("d", &MassOnCarParams::d);
    plant("theta", &MassOnCarParams::theta);
    real("funnel_radius", &ExperimentConfig::funnel_radius);
    real("ref_amplitude", &ExperimentConfig::ref_amplitude);
    real("ref_omega", &ExperimentConfig::ref_omega);
    real("lambda", &ExperimentConfig::lambda);
    real("u_max", &ExperimentConfig::u_max);
    real("q", &ExperimentConfig::q);
    real("r", &ExperimentConfig::r);
    real("nu_reg", &ExperimentConfig::nu_reg);
    real("L_max", &ExperimentConfig::L_max);
    real("T_end", &ExperimentConfig::T_end);
    optional("gamma_min", &ExperimentConfig::gamma_min);
    optional("gamma_max", &ExperimentConfig::gamma_max);
    optional("beta", &ExperimentConfig::beta);
    optional("tau", &ExperimentConfig::tau);
    t["scenario"] = [](ExperimentConfig& c, std::string_view, std::string_view v) { c.scenario = v; };
    t["output"] = [](ExperimentConfig& c, std::string_view, std::string_view v) { c.output = v; };
    t["mode"] = [](ExperimentConfig& c, std::string_view, std::string_view v) { c.mode = parse_mode(v); };
    t["L"] = [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.L = to_int(k, v); };
    t["L_cap"] = [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.L_cap = to_int(k, v); };
    t["seed"] = [](ExperimentConfig& c, std::string_view k, std::string_view v) {
      const long long s = to_int(k, v);
      if (s < 0) throw ConfigError("seed: must be nonnegative");
      c.seed = static_cast<std::uint64_t>(s);
    };
    t["verify_points"] = [](ExperimentConfig& c, std::string_view k, std::string_view v) {
      c.verify_points = static_cast<int>(to_int(k, v));
    };
    t["admm_eps"] = [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.admm.eps = to_double(k, v); };
    t["admm_max_iter"] = [](ExperimentConfig& c, std::string_view k, std::string_view v) {
      c.admm.max_iter = static_cast<int>(to_int(k, v));
    };
    t["polish"] = [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.admm.polish = to_bool(k, v); };
    t["warm_start"] = [](ExperimentConfig& c, std::string_view k, std::string_view v) {
      c.admm.warm_start = to_bool(k, v);
    };
    return t;
  }();
  return table;
}

}  // namespace

Mode parse_mode(std::string_view text) {
  if (text == "fixed") return Mode::Fixed;
  if (text == "adaptive") return Mode::Adaptive;
  if (text == "zoh-only") return Mode::ZohOnly;
  throw ConfigError("mode: expected fixed, adaptive or zoh-only, got '" + std::string(text) + "'");
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  const auto& t = setters();
  const auto it = t.find(key);
  if (it == t.end()) throw ConfigError("unknown key '" + std::string(key) + "'");
  it->second(cfg, key, trim(value));
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string_view key = trim(s.substr(0, eq));
    const std::string_view value = trim(s.substr(eq + 1));
    try {
      apply_setting(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, std::move(base));
}

}  // namespace ddfc
