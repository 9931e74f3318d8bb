#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace wdt::cli {

/// Bad config file, unknown key or value outside its valid range.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KeySpec {
  std::string key;  // section.name
  std::string default_value;
  std::string help;
};

/// Every accepted key with its default, in display order.
const std::vector<KeySpec>& schema();

/// Flat section.key -> value map, always fully populated from the schema.
class Config {
 public:
  Config();

  /// Parses INI text ([section] headers, key = value lines, # or ; comments).
  void load_ini(const std::string& text, const std::string& origin);
  /// Applies "section.key=value".
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  const std::string& str(const std::string& key) const;
  double num(const std::string& key) const;
  int integer(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> list(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  /// Resolved config as INI text (sections in schema order).
  std::string to_ini() const;
  /// FNV-1a 64 of to_ini().
  std::string hash() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace wdt::cli
