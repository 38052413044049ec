#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "octskin/error.hpp"

namespace octskin {

/// One `key = value` line, with its 1-based source line for diagnostics.
struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

/// Parses UTF-8 `key = value` lines. `#` starts a comment; blank lines are
/// ignored. Duplicate keys and lines without `=` raise ConfigError.
std::vector<KeyValue> parse_key_values(std::string_view text, std::string_view origin);

std::string read_text_file(const std::filesystem::path& path);

/// Strict numeric conversions; the whole string must be consumed.
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);
bool parse_bool(std::string_view text, std::string_view what);
std::vector<double> parse_double_list(std::string_view text, std::string_view what);
std::vector<std::string> split(std::string_view text, char sep);
std::string trim(std::string_view text);

/// Flat, typed key-value configuration. Every key has a declared type and a
/// default; unknown keys and badly typed values are rejected on load.
class RunConfig {
 public:
  enum class Kind { kInt, kReal, kBool, kString };

  struct Field {
    Kind kind;
    std::string value;
    std::string help;
  };

  /// All keys with their defaults.
  RunConfig();

  static RunConfig from_file(const std::filesystem::path& path);
  static RunConfig from_text(std::string_view text, std::string_view origin = "<config>");

  /// Type-checks and stores `value` for `key`; ConfigError on unknown key.
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return fields_.contains(key); }

  long long get_int(const std::string& key) const;
  double get_real(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  const std::string& get_string(const std::string& key) const;

  /// Canonical `key = value` dump, sorted by key.
  std::string to_text() const;
  const std::map<std::string, Field>& fields() const { return fields_; }

 private:
  const Field& field(const std::string& key, Kind kind) const;
  std::map<std::string, Field> fields_;
};

}  // namespace octskin
