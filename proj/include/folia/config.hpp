#pragma once
// Experiment configuration: flat "key = value" text, '#' comments, optional [section] headers
// that prefix the following keys with "section.".
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "folia/errors.hpp"
#include "folia/models.hpp"
#include "folia/perturb.hpp"

namespace folia {

using FlatConfig = std::map<std::string, std::string>;

namespace detail {
inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r"), e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}
}  // namespace detail

inline FlatConfig parse_flat_config(const std::string& text) {
  FlatConfig out;
  std::istringstream in(text);
  std::string line, section;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto where = " (line " + std::to_string(lineno) + ")";
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorKind::Input, "unterminated section header" + where);
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail(ErrorKind::Input, "empty section name" + where);
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::Input, "expected 'key = value'" + where);
    auto key = detail::trim(line.substr(0, eq)), value = detail::trim(line.substr(eq + 1));
    if (key.empty()) fail(ErrorKind::Input, "empty key" + where);
    if (!section.empty()) key = section + "." + key;
    if (out.count(key)) fail(ErrorKind::Input, "duplicate key '" + key + "'" + where);
    out[key] = value;
  }
  return out;
}

inline FlatConfig read_flat_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorKind::Input, "cannot read config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_flat_config(ss.str());
}

struct ExperimentConfig {
  // model
  std::string model = "suspension";
  double alpha = kGoldenAlpha;
  double base_point = 0.0;
  double half_width = 0.05;
  // perturbation
  double b1_offset = 7e-4;
  int N = 8;
  int r = 2;
  double delta = 1e-2;
  Convention convention = Convention::ProofConsistent;
  Spacing spacing = Spacing::Capture;
  int max_iter = 500;
  double converge_tol = 1e-6;
  int max_retries = 10;
  long search_powers = 4'000'000;
  int samples = 4096;
  // independent resilience search
  int search_depth = 4;
  long return_depth = 4'000'000;
  // entropy
  bool entropy = true;
  int n_max = 12;
  std::vector<double> epsilons{1.0 / 64};
  int grid = 4096;
  // atlas scene
  bool atlas = false;
  double atlas_amplitude = 1.0;
  double atlas_blend_end = 0.45;
  int atlas_samples = 10000;
  // outputs
  std::string report = "report.json";
  std::string csv;  // default: report path with .entropy.csv

  PerturbParams perturb_params() const {
    PerturbParams P;
    P.b1_offset = b1_offset, P.N = N, P.r = r, P.delta = delta, P.convention = convention;
    P.spacing = SpacingRule{spacing, max_iter, converge_tol};
    P.max_retries = max_retries, P.search_powers = search_powers, P.samples = samples;
    return P;
  }
  RecurrentScenario scenario() const { return scenario_by_name(model, alpha, base_point, half_width); }
};

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  // "1/64" is accepted for convenience
  auto slash = v.find('/');
  if (slash != std::string::npos) return to_double(key, v.substr(0, slash)) / to_double(key, v.substr(slash + 1));
  auto t = trim(v);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || p != t.data() + t.size() || !std::isfinite(x))
    fail(ErrorKind::Input, "key '" + key + "': not a number: '" + v + "'");
  return x;
}

inline long to_long(const std::string& key, const std::string& v) {
  double x = to_double(key, v);
  if (x != std::floor(x) || std::abs(x) > 1e15) fail(ErrorKind::Input, "key '" + key + "': not an integer: '" + v + "'");
  return static_cast<long>(x);
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorKind::Input, "key '" + key + "': not a boolean: '" + v + "'");
}

inline void range(const std::string& key, bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::Input, "key '" + key + "' out of range: " + what);
}

}  // namespace detail

inline ExperimentConfig config_from_flat(const FlatConfig& F) {
  using namespace detail;
  ExperimentConfig c;
  for (const auto& [k, v] : F) {
    if (k == "model") c.model = v;
    else if (k == "alpha") c.alpha = to_double(k, v);
    else if (k == "model.base_point") c.base_point = to_double(k, v);
    else if (k == "model.half_width") c.half_width = to_double(k, v);
    else if (k == "b1_offset") c.b1_offset = to_double(k, v);
    else if (k == "N") c.N = static_cast<int>(to_long(k, v));
    else if (k == "r") c.r = static_cast<int>(to_long(k, v));
    else if (k == "delta") c.delta = to_double(k, v);
    else if (k == "convention") c.convention = parse_convention(v);
    else if (k == "max_iter") c.max_iter = static_cast<int>(to_long(k, v));
    else if (k == "perturb.spacing") c.spacing = parse_spacing(v);
    else if (k == "perturb.converge_tol") c.converge_tol = to_double(k, v);
    else if (k == "perturb.max_retries") c.max_retries = static_cast<int>(to_long(k, v));
    else if (k == "perturb.search_powers") c.search_powers = to_long(k, v);
    else if (k == "perturb.samples") c.samples = static_cast<int>(to_long(k, v));
    else if (k == "search.depth") c.search_depth = static_cast<int>(to_long(k, v));
    else if (k == "search.return_depth") c.return_depth = to_long(k, v);
    else if (k == "entropy.enabled") c.entropy = to_bool(k, v);
    else if (k == "entropy.n_max") c.n_max = static_cast<int>(to_long(k, v));
    else if (k == "entropy.grid") c.grid = static_cast<int>(to_long(k, v));
    else if (k == "entropy.epsilon") {
      c.epsilons.clear();
      std::istringstream in(v);
      for (std::string e; std::getline(in, e, ',');) c.epsilons.push_back(to_double(k, e));
    } else if (k == "atlas.enabled") c.atlas = to_bool(k, v);
    else if (k == "atlas.amplitude") c.atlas_amplitude = to_double(k, v);
    else if (k == "atlas.blend_end") c.atlas_blend_end = to_double(k, v);
    else if (k == "atlas.samples") c.atlas_samples = static_cast<int>(to_long(k, v));
    else if (k == "output.report") c.report = v;
    else if (k == "output.csv") c.csv = v;
    else fail(ErrorKind::Input, "unknown key '" + k + "'");
  }
  if (c.model != "suspension" && c.model != "product_flow" && c.model != "reeb")
    fail(ErrorKind::Input, "unknown model '" + c.model + "'");
  range("alpha", c.alpha >= 0.0 && c.alpha < 1.0, "[0, 1)");
  range("model.base_point", c.base_point >= 0.0 && c.base_point <= 1.0, "[0, 1]");
  range("model.half_width", c.half_width > 0.0 && c.half_width <= 0.25, "(0, 0.25]");
  range("b1_offset", c.b1_offset > 0.0 && c.b1_offset < c.half_width, "(0, half_width)");
  range("N", c.N >= 1 && c.N <= 64, "1..64");
  range("r", c.r >= 0 && c.r <= 8, "0..8");
  range("delta", c.delta > 0.0, "> 0");
  range("max_iter", c.max_iter >= 1 && c.max_iter <= 100000, "1..100000");
  range("perturb.converge_tol", c.converge_tol > 0.0 && c.converge_tol < 1.0, "(0, 1)");
  range("perturb.max_retries", c.max_retries >= 0 && c.max_retries <= 60, "0..60");
  range("perturb.search_powers", c.search_powers >= 1 && c.search_powers <= 100'000'000, "1..1e8");
  range("perturb.samples", c.samples >= 16 && c.samples <= (1 << 20), "16..2^20");
  range("search.depth", c.search_depth >= 1 && c.search_depth <= 12, "1..12");
  range("search.return_depth", c.return_depth >= 0 && c.return_depth <= 100'000'000, "0..1e8");
  range("entropy.n_max", c.n_max >= 2 && c.n_max <= 16, "2..16");
  range("entropy.grid", c.grid >= 2 && c.grid <= (1 << 16), "2..2^16");
  range("entropy.epsilon", !c.epsilons.empty(), "at least one value");
  for (double e : c.epsilons) range("entropy.epsilon", e > 0.0 && e < 0.5, "(0, 0.5)");
  range("atlas.amplitude", c.atlas_amplitude >= 0.0 && c.atlas_amplitude <= 2.0, "[0, 2]");
  range("atlas.blend_end", c.atlas_blend_end > 0.1 && c.atlas_blend_end < 1.0, "(0.1, 1)");
  range("atlas.samples", c.atlas_samples >= 1 && c.atlas_samples <= 1'000'000, "1..1e6");
  if (c.report.empty()) fail(ErrorKind::Input, "output.report must not be empty");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) { return config_from_flat(read_flat_config(path)); }

// canonical echo, one entry per key, values as written back by the parser
inline FlatConfig config_echo(const ExperimentConfig& c) {
  auto num = [](double x) {
    std::ostringstream o;
    o.precision(17);
    o << x;
    return o.str();
  };
  std::string eps;
  for (double e : c.epsilons) eps += (eps.empty() ? "" : ",") + num(e);
  return {{"model", c.model},
          {"alpha", num(c.alpha)},
          {"model.base_point", num(c.base_point)},
          {"model.half_width", num(c.half_width)},
          {"b1_offset", num(c.b1_offset)},
          {"N", std::to_string(c.N)},
          {"r", std::to_string(c.r)},
          {"delta", num(c.delta)},
          {"convention", to_string(c.convention)},
          {"max_iter", std::to_string(c.max_iter)},
          {"perturb.spacing", to_string(c.spacing)},
          {"perturb.converge_tol", num(c.converge_tol)},
          {"perturb.max_retries", std::to_string(c.max_retries)},
          {"perturb.search_powers", std::to_string(c.search_powers)},
          {"perturb.samples", std::to_string(c.samples)},
          {"search.depth", std::to_string(c.search_depth)},
          {"search.return_depth", std::to_string(c.return_depth)},
          {"entropy.enabled", c.entropy ? "true" : "false"},
          {"entropy.n_max", std::to_string(c.n_max)},
          {"entropy.epsilon", eps},
          {"entropy.grid", std::to_string(c.grid)},
          {"atlas.enabled", c.atlas ? "true" : "false"},
          {"atlas.amplitude", num(c.atlas_amplitude)},
          {"atlas.blend_end", num(c.atlas_blend_end)},
          {"atlas.samples", std::to_string(c.atlas_samples)},
          {"output.report", c.report},
          {"output.csv", c.csv}};
}

}  // namespace folia
