#pragma once

// Run settings: a line-oriented `key = value` file (with `#` comments) merged
// with command-line flags, plus typed accessors that validate each key.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "steinmix/mc_harness.hpp"
#include "steinmix/stein_bounds.hpp"
#include "steinmix/you_analytic.hpp"

namespace steinmix {

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every accepted key. The command-line flag is the key with '_' -> '-'.
inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "model",    "alpha",   "sigma_a2", "x0",   "p",    "sigma_c2", "schedule", "n",
      "replicates", "seed",  "workers",  "distance", "alphas", "n_grid", "panel", "json",
      "csv",      "gnuplot", "level"};
  return keys;
}

inline std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

inline bool is_known_key(std::string_view key) {
  const auto& k = known_keys();
  return std::find(k.begin(), k.end(), key) != k.end();
}

namespace detail {
inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}
}  // namespace detail

using SettingMap = std::map<std::string, std::string>;

inline SettingMap parse_config_text(std::string_view text, std::string_view origin = "config") {
  SettingMap out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = std::string(origin) + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw config_error(where + ": expected 'key = value'");
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    if (!is_known_key(key)) throw config_error(where + ": unknown key '" + key + "'");
    if (value.empty()) throw config_error(where + ": empty value for key '" + key + "'");
    out[key] = value;
  }
  return out;
}

inline SettingMap read_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw config_error("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), path);
}

/// Flags win over file values.
inline SettingMap merge_settings(const SettingMap& file, const SettingMap& flags) {
  SettingMap out = file;
  for (const auto& [k, v] : flags) {
    if (!is_known_key(k)) throw config_error("unknown key '" + k + "'");
    out[k] = v;
  }
  return out;
}

/// Typed, validated view over merged settings.
class Settings {
 public:
  Settings() = default;
  explicit Settings(SettingMap values) : values_(std::move(values)) {}

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const SettingMap& raw() const { return values_; }

  std::string text(const std::string& key, const std::string& fallback = {}) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double real(const std::string& key, double fallback) const {
    return has(key) ? parse_real(key, values_.at(key)) : fallback;
  }

  std::uint64_t integer(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? parse_integer(key, values_.at(key)) : fallback;
  }

  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(values_.at(key))) out.push_back(parse_real(key, item));
    return out;
  }

  std::vector<std::uint64_t> integers(const std::string& key) const {
    std::vector<std::uint64_t> out;
    for (const auto& item : split_list(values_.at(key))) out.push_back(parse_integer(key, item));
    return out;
  }

  Model model() const {
    const std::string m = detail::lower(text("model", "you"));
    if (m == "you") return Model::you;
    if (m == "youj") return Model::youj;
    throw config_error("model: expected YOU or YOUj, got '" + text("model") + "'");
  }

  DistanceKind distance() const {
    const std::string d = detail::lower(text("distance", "kolmogorov"));
    if (d == "kolmogorov" || d == "k" || d == "dk") return DistanceKind::kolmogorov;
    if (d == "wasserstein" || d == "w" || d == "dw") return DistanceKind::wasserstein;
    throw config_error("distance: expected kolmogorov or wasserstein, got '" + text("distance") + "'");
  }

  /// x0 defaults to (2 alpha)^{-1/2}, sigma_a2 to 1.
  YouParams params() const {
    YouParams p;
    p.alpha = real("alpha", 1.0);
    p.sigma_a2 = real("sigma_a2", 1.0);
    if (!(p.alpha > 0.0)) throw config_error("alpha: must be positive");
    if (!(p.sigma_a2 > 0.0)) throw config_error("sigma_a2: must be positive");
    p.x0 = real("x0", 1.0 / std::sqrt(2.0 * p.alpha));
    return p;
  }

  /// YOUj defaults to p = 1/2, sigma_c2 = 1; a schedule file replaces both.
  JumpSchedule schedule() const {
    if (model() == Model::you) {
      for (const char* k : {"p", "sigma_c2", "schedule"})
        if (has(k)) throw config_error(std::string(k) + ": only valid with model = YOUj");
      return JumpSchedule::none();
    }
    if (has("schedule")) {
      if (has("p") || has("sigma_c2")) throw config_error("schedule: cannot be combined with p or sigma_c2");
      return read_schedule_file(text("schedule"));
    }
    const double p = real("p", 0.5);
    const double s2 = real("sigma_c2", 1.0);
    if (!(p >= 0.0 && p <= 1.0)) throw config_error("p: must lie in [0,1]");
    if (!(s2 >= 0.0)) throw config_error("sigma_c2: must be nonnegative");
    return JumpSchedule::constant(p, s2);
  }

  /// STEINMIX_WORKERS supplies the default; the workers key overrides it.
  unsigned workers() const {
    std::uint64_t w = 1;
    if (const char* env = std::getenv("STEINMIX_WORKERS"); env != nullptr && *env != '\0')
      w = parse_integer("STEINMIX_WORKERS", env);
    w = integer("workers", w);
    if (w < 1 || w > 4096) throw config_error("workers: must lie in [1, 4096]");
    return static_cast<unsigned>(w);
  }

  ExperimentConfig experiment() const {
    ExperimentConfig c;
    c.model = model();
    c.params = params();
    c.schedule = schedule();
    c.n = integer("n", 200);
    c.replicates = integer("replicates", 100'000);
    if (!has("seed")) throw config_error("seed: required for simulation runs");
    c.seed = integer("seed", 0);
    c.workers = workers();
    if (c.n < 2) throw config_error("n: must be >= 2");
    if (c.replicates < 2) throw config_error("replicates: must be >= 2");
    if (!c.schedule.covers(c.n))
      throw config_error("schedule: has " + std::to_string(c.schedule.rates().size()) + " events, n = " +
                         std::to_string(c.n) + " needs " + std::to_string(c.n - 1));
    return c;
  }

  /// One `p sigma_c2` pair per line for events 1, 2, ...; `#` comments allowed.
  static JumpSchedule read_schedule_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("schedule: cannot read '" + path + "'");
    std::vector<JumpRate> rates;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      if (detail::trim(line).empty()) continue;
      std::istringstream ls(line);
      JumpRate r;
      std::string extra;
      if (!(ls >> r.p >> r.sigma_c2) || (ls >> extra))
        throw config_error("schedule: " + path + ":" + std::to_string(lineno) + ": expected 'p sigma_c2'");
      if (!(r.p >= 0.0 && r.p <= 1.0) || !(r.sigma_c2 >= 0.0))
        throw config_error("schedule: " + path + ":" + std::to_string(lineno) + ": p in [0,1], sigma_c2 >= 0");
      rates.push_back(r);
    }
    return JumpSchedule::per_event(std::move(rates));
  }

 private:
  static std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
      item = detail::trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  static double parse_real(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0' || !std::isfinite(d))
      throw config_error(key + ": expected a finite number, got '" + v + "'");
    return d;
  }

  static std::uint64_t parse_integer(const std::string& key, const std::string& v) {
    // Accept plain integers and exact floating forms such as 1e5.
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec == std::errc() && ptr == v.data() + v.size()) return out;
    const double d = parse_real(key, v);
    if (d < 0.0 || d > 9.007199254740992e15 || std::floor(d) != d)
      throw config_error(key + ": expected a nonnegative integer, got '" + v + "'");
    return static_cast<std::uint64_t>(d);
  }

  SettingMap values_;
};

}  // namespace steinmix
