#ifndef SOV_IO_HPP
#define SOV_IO_HPP

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "sov/core.hpp"
#include "sov/functional.hpp"

namespace sov {

inline constexpr const char* kVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Plain-text key/value configuration.
//
//   # comment
//   nu = 1.0
//   [flow]
//   tol = 1e-8        -> key "flow.tol"

class Config {
 public:
  Config() = default;

  static Config parse(std::istream& is, const std::string& origin = "<config>") {
    Config c;
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string t = trim(line);
      if (t.empty()) continue;
      if (t.front() == '[') {
        if (t.back() != ']' || t.size() < 3)
          throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
        section = trim(t.substr(1, t.size() - 2));
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
      std::string key = trim(t.substr(0, eq));
      if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      if (!section.empty()) key = section + "." + key;
      c.set(key, trim(t.substr(eq + 1)));
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    return parse(f, path);
  }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::optional<std::string> raw(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    used_.insert(key);
    return it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto v = raw(key);
    if (!v) note_default(key, format(fallback));
    return v ? to_double(key, *v) : fallback;
  }
  long get_int(const std::string& key, long fallback) const {
    const auto v = raw(key);
    if (!v) note_default(key, std::to_string(fallback));
    return v ? to_int(key, *v) : fallback;
  }
  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto v = raw(key);
    if (!v) note_default(key, fallback);
    return v.value_or(fallback);
  }
  bool get_bool(const std::string& key, bool fallback) const {
    const auto v = raw(key);
    if (!v) note_default(key, fallback ? "true" : "false");
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError(key + ": expected a boolean, got '" + *v + "'");
  }
  std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const {
    const auto v = raw(key);
    if (!v) {
      std::string d;
      for (double x : fallback) d += (d.empty() ? "" : ",") + format(x);
      note_default(key, d);
    }
    return v ? to_list(key, *v) : fallback;
  }

  /// Every key that was read, with the value actually used (defaults included).
  std::map<std::string, std::string> effective() const {
    std::map<std::string, std::string> out = defaults_;
    for (const auto& k : used_) out[k] = values_.at(k);
    return out;
  }

  static std::string format(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }

  /// Keys that were never read: usually typos.
  std::vector<std::string> unused() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) out.push_back(k);
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  static double to_double(const std::string& key, const std::string& s) {
    double x = 0.0;
    const auto* b = s.data();
    const auto* e = s.data() + s.size();
    const auto r = std::from_chars(b, e, x);
    if (r.ec != std::errc() || r.ptr != e || !std::isfinite(x))
      throw ConfigError(key + ": expected a real number, got '" + s + "'");
    return x;
  }
  static long to_int(const std::string& key, const std::string& s) {
    long x = 0;
    const auto* e = s.data() + s.size();
    const auto r = std::from_chars(s.data(), e, x);
    if (r.ec != std::errc() || r.ptr != e) throw ConfigError(key + ": expected an integer, got '" + s + "'");
    return x;
  }
  static std::vector<double> to_list(const std::string& key, const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string t = trim(item);
      if (!t.empty()) out.push_back(to_double(key, t));
    }
    if (out.empty()) throw ConfigError(key + ": expected a comma-separated list");
    return out;
  }

 private:
  static std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
  }

  void note_default(const std::string& key, std::string v) const { defaults_.emplace(key, std::move(v)); }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
  mutable std::map<std::string, std::string> defaults_;
};

/// Parameters from keys nu, lambda_plus, lambda_minus, lambda_zero.
inline Parameters parameters_from(const Config& c) {
  Parameters p;
  p.nu = c.get_double("nu", p.nu);
  p.lambda_plus = c.get_double("lambda_plus", p.lambda_plus);
  p.lambda_minus = c.get_double("lambda_minus", p.lambda_minus);
  p.lambda_zero = c.get_double("lambda_zero", p.lambda_zero);
  try {
    p.validate();
  } catch (const OutOfRange& e) {
    throw ConfigError(std::string("parameters: ") + e.what());
  }
  return p;
}

// ---------------------------------------------------------------------------
// Result records: one line per record, "name key=value key=value ...".
// Reals are written with 17 significant digits so records round-trip.

class Record {
 public:
  explicit Record(std::string name) : name_(std::move(name)) {}

  Record& add(const std::string& key, double v) {
    fields_.emplace_back(key, Config::format(v));
    return *this;
  }
  Record& add(const std::string& key, int v) {
    fields_.emplace_back(key, std::to_string(v));
    return *this;
  }
  Record& add(const std::string& key, long v) {
    fields_.emplace_back(key, std::to_string(v));
    return *this;
  }
  Record& add(const std::string& key, bool v) {
    fields_.emplace_back(key, v ? "true" : "false");
    return *this;
  }
  Record& add(const std::string& key, const std::string& v) {
    std::string s = v;
    std::replace(s.begin(), s.end(), ' ', '_');
    fields_.emplace_back(key, s);
    return *this;
  }
  Record& add(const std::string& key, const char* v) { return add(key, std::string(v)); }

  Record& add(const std::string& prefix, const EnergyBreakdown& e) {
    add(prefix + "kinetic", e.kinetic);
    add(prefix + "vso", e.vso);
    add(prefix + "nonlinear", e.nonlinear);
    add(prefix + "elin", e.elin);
    add(prefix + "total", e.total);
    return *this;
  }

  std::string line() const {
    std::string s = name_;
    for (const auto& [k, v] : fields_) s += " " + k + "=" + v;
    return s;
  }

  const std::string& name() const { return name_; }
  const std::vector<std::pair<std::string, std::string>>& fields() const { return fields_; }

 private:
  std::string name_;
  std::vector<std::pair<std::string, std::string>> fields_;
};

/// Parses a record line back into (name, key -> value).
inline std::pair<std::string, std::map<std::string, std::string>> parse_record(const std::string& line) {
  std::stringstream ss(line);
  std::string name, tok;
  ss >> name;
  std::map<std::string, std::string> kv;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed record field '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return {name, kv};
}

// ---------------------------------------------------------------------------
// Run directory: results file plus a JSON manifest listing every file written.

class RunOutput {
 public:
  RunOutput(std::filesystem::path dir, std::string command)
      : dir_(std::move(dir)), command_(std::move(command)) {
    std::filesystem::create_directories(dir_);
  }

  std::filesystem::path path(const std::string& name) {
    files_.push_back(name);
    return dir_ / name;
  }

  void record(const Record& r) { records_.push_back(r.line()); }

  /// Stores the parameters actually used: explicit settings plus defaults.
  void set_config(const Config& c) {
    for (const auto& [k, v] : c.values()) config_[k] = v;
    for (const auto& [k, v] : c.effective()) config_[k] = v;
  }
  void set(const std::string& key, nlohmann::json v) { extra_[key] = std::move(v); }

  /// Writes results.txt and manifest.json.
  void finish(int exit_code) {
    {
      std::ofstream f(dir_ / "results.txt");
      for (const auto& l : records_) f << l << '\n';
    }
    nlohmann::json m;
    m["program"] = "sov";
    m["version"] = kVersion;
    m["command"] = command_;
    m["exit_code"] = exit_code;
    m["config"] = config_;
    m["run"] = extra_;
    std::vector<std::string> files = files_;
    files.push_back("results.txt");
    std::sort(files.begin(), files.end());
    files.erase(std::unique(files.begin(), files.end()), files.end());
    m["files"] = files;
    std::ofstream f(dir_ / "manifest.json");
    f << m.dump(2) << '\n';
  }

  const std::filesystem::path& dir() const { return dir_; }
  const std::vector<std::string>& records() const { return records_; }

 private:
  std::filesystem::path dir_;
  std::string command_;
  std::vector<std::string> records_;
  std::vector<std::string> files_;
  nlohmann::json config_ = nlohmann::json::object();
  nlohmann::json extra_ = nlohmann::json::object();
};

}  // namespace sov

#endif  // SOV_IO_HPP
