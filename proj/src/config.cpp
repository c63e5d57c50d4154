#include "membrana/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace membrana {

ConfigBlock::ConfigBlock(const Json& node, std::string path) : path_(std::move(path)) {
  if (node.is_null()) {
    node_ = Json::object();
  } else if (node.is_object()) {
    node_ = node;
  } else {
    throw ValidationError("config: '" + path_ + "' must be an object");
  }
}

void ConfigBlock::fail(const std::string& key, const std::string& what) const {
  throw ValidationError("config: '" + path_ + "." + key + "' " + what);
}

const Json* ConfigBlock::find(const std::string& key) {
  seen_.insert(key);
  const auto it = node_.find(key);
  return it == node_.end() ? nullptr : &*it;
}

double ConfigBlock::number(const std::string& key, double fallback) {
  const Json* j = find(key);
  double v = fallback;
  if (j != nullptr) {
    if (!j->is_number()) fail(key, "must be a number");
    v = j->get<double>();
  }
  if (!std::isfinite(v)) fail(key, "must be finite");
  resolved_[key] = v;
  return v;
}

double ConfigBlock::positive(const std::string& key, double fallback) {
  const double v = number(key, fallback);
  if (!(v > 0.0)) fail(key, "must be positive");
  return v;
}

int ConfigBlock::integer(const std::string& key, int fallback, int min_value) {
  const Json* j = find(key);
  int v = fallback;
  if (j != nullptr) {
    if (!j->is_number_integer()) fail(key, "must be an integer");
    v = j->get<int>();
  }
  if (v < min_value) fail(key, "must be at least " + std::to_string(min_value));
  resolved_[key] = v;
  return v;
}

bool ConfigBlock::boolean(const std::string& key, bool fallback) {
  const Json* j = find(key);
  bool v = fallback;
  if (j != nullptr) {
    if (!j->is_boolean()) fail(key, "must be true or false");
    v = j->get<bool>();
  }
  resolved_[key] = v;
  return v;
}

std::string ConfigBlock::choice(const std::string& key, const std::string& fallback,
                                const std::vector<std::string>& allowed) {
  const std::string v = text(key, fallback);
  if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    fail(key, "must be one of: " + list);
  }
  return v;
}

std::string ConfigBlock::text(const std::string& key, const std::string& fallback) {
  const Json* j = find(key);
  std::string v = fallback;
  if (j != nullptr) {
    if (!j->is_string()) fail(key, "must be a string");
    v = j->get<std::string>();
  }
  resolved_[key] = v;
  return v;
}

std::optional<std::vector<double>> ConfigBlock::optional_numbers(const std::string& key) {
  const Json* j = find(key);
  if (j == nullptr || j->is_null()) return std::nullopt;
  if (!j->is_array()) fail(key, "must be an array of numbers");
  std::vector<double> v;
  for (const auto& e : *j) {
    if (!e.is_number()) fail(key, "must be an array of numbers");
    v.push_back(e.get<double>());
    if (!std::isfinite(v.back())) fail(key, "entries must be finite");
  }
  resolved_[key] = v;
  return v;
}

std::vector<double> ConfigBlock::numbers(const std::string& key, const std::vector<double>& fallback) {
  auto v = optional_numbers(key);
  if (!v) {
    resolved_[key] = fallback;
    return fallback;
  }
  return *v;
}

void ConfigBlock::finish() const {
  for (const auto& [key, value] : node_.items()) {
    (void)value;
    if (!seen_.count(key)) throw ValidationError("config: unknown key '" + path_ + "." + key + "'");
  }
}

const Json& RunConfig::block(const std::string& name) const {
  static const Json null_json;
  const auto it = command_blocks.find(name);
  return it == command_blocks.end() ? null_json : *it;
}

const std::vector<std::string>& command_block_names() {
  static const std::vector<std::string> names = {
      "eig",   "logistic", "semitrivial", "coexist",    "evolve", "curve_h", "curve_g",      "curve_ghat",
      "mu0",   "mu1",      "mu_star",     "region_map", "branch", "limit_system", "oracle"};
  return names;
}

RunConfig parse_config(const Json& doc) {
  if (!doc.is_object()) throw ValidationError("config: top level must be an object");
  RunConfig cfg;
  const auto& names = command_block_names();
  for (const auto& [key, value] : doc.items()) {
    const bool known = key == "geometry" || key == "params" || key == "seed" || key == "output" ||
                       std::find(names.begin(), names.end(), key) != names.end();
    if (!known) throw ValidationError("config: unknown key '" + key + "'");
    if (std::find(names.begin(), names.end(), key) != names.end()) {
      if (!value.is_object()) throw ValidationError("config: '" + key + "' must be an object");
      cfg.command_blocks[key] = value;
    }
  }

  const Json empty;
  ConfigBlock geo(doc.contains("geometry") ? doc.at("geometry") : empty, "geometry");
  const Geometry1D g0;
  const auto outer = geo.numbers("outer", {g0.x_left, g0.x_right});
  const auto inner = geo.numbers("inner", {g0.a, g0.b});
  if (outer.size() != 2) throw ValidationError("config: 'geometry.outer' must have two entries");
  if (inner.size() != 2) throw ValidationError("config: 'geometry.inner' must have two entries");
  cfg.geometry.x_left = outer[0];
  cfg.geometry.x_right = outer[1];
  cfg.geometry.a = inner[0];
  cfg.geometry.b = inner[1];
  cfg.geometry.gamma1 = geo.number("gamma1", g0.gamma1);
  cfg.geometry.gamma2 = geo.number("gamma2", g0.gamma2);
  cfg.n_per_unit = geo.integer("n_per_unit", 64, 8);
  geo.finish();
  cfg.geometry.validate();

  ConfigBlock par(doc.contains("params") ? doc.at("params") : empty, "params");
  const ModelParams p0;
  ModelParams& p = cfg.params;
  p.lambda1 = par.number("lambda1", p0.lambda1);
  p.lambda2 = par.number("lambda2", p0.lambda2);
  p.mu = par.number("mu", p0.mu);
  p.alpha1 = par.number("alpha1", p0.alpha1.constant);
  p.alpha2 = par.number("alpha2", p0.alpha2.constant);
  p.a1 = par.number("a1", p0.a1);
  p.a2 = par.number("a2", p0.a2);
  p.b1 = par.number("b1", p0.b1);
  p.b2 = par.number("b2", p0.b2);
  p.beta = par.number("beta", p0.beta);
  p.d = par.number("d", p0.d);
  par.finish();
  p.geometry = cfg.geometry;
  p.validate();

  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) throw ValidationError("config: 'seed' must be a non-negative integer");
    cfg.seed = doc.at("seed").get<std::uint64_t>();
  }
  if (doc.contains("output")) {
    if (!doc.at("output").is_string()) throw ValidationError("config: 'output' must be a string");
    cfg.output = doc.at("output").get<std::string>();
  }

  cfg.resolved["geometry"] = geo.resolved();
  cfg.resolved["params"] = par.resolved();
  cfg.resolved["seed"] = cfg.seed;
  cfg.resolved["output"] = cfg.output;
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  Json doc;
  try {
    doc = Json::parse(ss.str());
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return parse_config(doc);
}

}  // namespace membrana
