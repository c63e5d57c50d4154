#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "membrana/model.hpp"

namespace membrana {

using Json = nlohmann::json;

/// Strict reader over one JSON object. Every accessor records the value it returns
/// (explicit or default) in `resolved()`; finish() rejects keys that were never read.
class ConfigBlock {
 public:
  /// `node` must be an object or null (treated as empty). `path` names the block in
  /// diagnostics.
  ConfigBlock(const Json& node, std::string path);

  double number(const std::string& key, double fallback);
  /// Number that must be > 0.
  double positive(const std::string& key, double fallback);
  int integer(const std::string& key, int fallback, int min_value);
  bool boolean(const std::string& key, bool fallback);
  std::string choice(const std::string& key, const std::string& fallback, const std::vector<std::string>& allowed);
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback);
  std::optional<std::vector<double>> optional_numbers(const std::string& key);
  std::string text(const std::string& key, const std::string& fallback);

  /// Throws ValidationError naming the first unknown key.
  void finish() const;
  const Json& resolved() const { return resolved_; }

 private:
  const Json* find(const std::string& key);
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  Json node_;
  std::string path_;
  std::set<std::string> seen_;
  Json resolved_ = Json::object();
};

/// Parsed run configuration. Command blocks are kept raw until the command reads them.
struct RunConfig {
  Geometry1D geometry;
  int n_per_unit = 64;
  ModelParams params;
  std::uint64_t seed = 0;
  std::string output = "out";
  Json command_blocks = Json::object();
  /// Resolved geometry, params, seed and output; the executed command adds its block.
  Json resolved = Json::object();

  /// Raw block for a command (null when absent).
  const Json& block(const std::string& name) const;
};

/// Names of the command blocks accepted at the top level of a config.
const std::vector<std::string>& command_block_names();

/// Parses and validates a config document. Throws ValidationError on unknown keys, wrong
/// types or invalid values.
RunConfig parse_config(const Json& doc);

/// Reads a file and parses it; JSON syntax errors become ValidationError.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace membrana
