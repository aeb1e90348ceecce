#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace galds {

// Strict TOML subset: [section] and [[table array]] headers, `key = value`
// lines, comments, and scalar values (quoted string, integer, float, bool).
// No nesting inside values, no multi-line anything. Every diagnostic carries
// the source line. Keys are stored flat as "section.key"; table arrays index
// their entries as "name.0.key", "name.1.key", ...

struct TomlValue {
  enum class Kind { string, integer, floating, boolean };
  Kind kind = Kind::string;
  std::string str;
  int64_t i = 0;
  double f = 0.0;
  bool b = false;
  int32_t line = 0;
};

class TomlTable {
 public:
  TomlTable() = default;
  TomlTable(std::map<std::string, TomlValue> values, std::string source)
      : values_(std::move(values)), source_(std::move(source)) {}

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  // Typed getters mark the key consumed; a wrong kind fails with the line.
  std::string get_string(const std::string& key, const std::string& fallback);
  int64_t get_int(const std::string& key, int64_t fallback);
  double get_double(const std::string& key, double fallback);  // accepts ints
  bool get_bool(const std::string& key, bool fallback);
  std::string require_string(const std::string& key);

  // Entries under "name.<i>." for i = 0.., until the first missing index.
  int64_t table_array_size(const std::string& name) const;

  // Fails on any key never consumed, naming the first offender and its line.
  void require_consumed() const;

 private:
  const TomlValue* find(const std::string& key, TomlValue::Kind kind, const char* kind_name);

  std::map<std::string, TomlValue> values_;
  std::set<std::string> consumed_;
  std::string source_;
};

TomlTable parse_toml(std::string_view text, const std::string& source_name);
TomlTable parse_toml_file(const std::filesystem::path& path);

}  // namespace galds
