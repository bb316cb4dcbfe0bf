#pragma once

// Flat key=value run configuration with dotted section names, a registry of
// known keys, and built-in presets.

#include "ecrl/training.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ecrl::cli {

enum class ValueType { integer, real, boolean, text, choice };

struct KeyInfo {
  std::string key;
  ValueType type;
  std::string default_value;
  std::string help;
  std::vector<std::string> choices;
};

/// Every accepted key, in canonical order.
const std::vector<KeyInfo>& config_keys();
const KeyInfo* find_key(std::string_view key);

std::vector<std::string> preset_names();
bool is_preset(std::string_view name);

class Config {
 public:
  /// All keys at their defaults.
  Config();

  static Config preset(std::string_view name);
  /// Preset name or path to a key=value file applied over the defaults.
  static Config load(const std::string& name_or_path);

  /// Throws ConfigError naming the key for unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  /// Applies "key=value" (the --set syntax).
  void apply_override(std::string_view assignment);
  /// Parses key=value lines; '#' starts a comment. Throws ConfigError with the line number.
  void merge_text(std::string_view text, const std::string& source = "<text>");

  const std::string& get(std::string_view key) const;
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  /// Canonical echo: one "key = value" line per key, re-parseable byte for byte.
  std::string text() const;
  /// Hex FNV-1a hash of text().
  std::string hash() const;
  /// <env>_<variant>_s<seed>_<hash prefix>
  std::string run_id() const;

  /// Typed configuration; runs TrainConfig::validate().
  TrainConfig train_config() const;

  bool operator==(const Config& other) const { return values_ == other.values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace ecrl::cli
