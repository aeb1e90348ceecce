#include "galds/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "galds/error.hpp"

namespace galds {
namespace {

[[noreturn]] void parse_fail(const std::string& source, int32_t line, const std::string& what) {
  fail(ErrorCode::validation, source + ":" + std::to_string(line) + ": " + what);
}

std::string_view strip(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_key(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  return true;
}

// Values keep integer and float distinct so type mismatches are loud.
TomlValue parse_value(std::string_view raw, const std::string& source, int32_t line) {
  TomlValue v;
  v.line = line;
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
    v.kind = TomlValue::Kind::string;
    v.str = std::string(raw.substr(1, raw.size() - 2));
    if (v.str.find('"') != std::string::npos)
      parse_fail(source, line, "embedded quotes are not supported");
    return v;
  }
  if (raw == "true" || raw == "false") {
    v.kind = TomlValue::Kind::boolean;
    v.b = raw == "true";
    return v;
  }
  const std::string s(raw);
  if (s.find_first_of(".eE") == std::string::npos) {
    int64_t i = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), i);
    if (ec == std::errc() && p == s.data() + s.size()) {
      v.kind = TomlValue::Kind::integer;
      v.i = i;
      return v;
    }
  }
  try {
    size_t used = 0;
    const double f = std::stod(s, &used);
    if (used == s.size()) {
      v.kind = TomlValue::Kind::floating;
      v.f = f;
      return v;
    }
  } catch (const std::exception&) {
  }
  parse_fail(source, line, "cannot parse value '" + s + "'");
}

}  // namespace

TomlTable parse_toml(std::string_view text, const std::string& source_name) {
  std::map<std::string, TomlValue> values;
  std::map<std::string, int64_t> array_counts;
  std::string prefix;
  int32_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = line;
    if (const size_t hash = s.find('#'); hash != std::string_view::npos) {
      // Comments only start outside strings; keep it simple by forbidding '#'
      // inside values entirely.
      if (s.find('"', hash) != std::string_view::npos)
        parse_fail(source_name, line_no, "'#' must not appear inside a value");
      s = s.substr(0, hash);
    }
    s = strip(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      const bool array = s.size() >= 2 && s[1] == '[';
      const std::string_view close = array ? "]]" : "]";
      if (!s.ends_with(close)) parse_fail(source_name, line_no, "unterminated section header");
      std::string_view name = strip(s.substr(array ? 2 : 1, s.size() - 2 * (array ? 2 : 1)));
      if (!valid_key(name)) parse_fail(source_name, line_no, "bad section name");
      if (array) {
        const int64_t idx = array_counts[std::string(name)]++;
        prefix = std::string(name) + "." + std::to_string(idx) + ".";
      } else {
        prefix = std::string(name) + ".";
      }
      continue;
    }
    const size_t eq = s.find('=');
    if (eq == std::string_view::npos)
      parse_fail(source_name, line_no, "expected 'key = value' or a section header");
    const std::string_view key = strip(s.substr(0, eq));
    if (!valid_key(key)) parse_fail(source_name, line_no, "bad key '" + std::string(key) + "'");
    const std::string full = prefix + std::string(key);
    if (values.count(full)) parse_fail(source_name, line_no, "duplicate key '" + full + "'");
    values[full] = parse_value(strip(s.substr(eq + 1)), source_name, line_no);
  }
  return TomlTable(std::move(values), source_name);
}

TomlTable parse_toml_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_toml(buf.str(), path.string());
}

const TomlValue* TomlTable::find(const std::string& key, TomlValue::Kind kind,
                                 const char* kind_name) {
  const auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  consumed_.insert(key);
  const TomlValue& v = it->second;
  const bool ok =
      v.kind == kind || (kind == TomlValue::Kind::floating && v.kind == TomlValue::Kind::integer);
  if (!ok)
    fail(ErrorCode::validation, source_ + ":" + std::to_string(v.line) + ": key '" + key +
                                    "' must be a " + kind_name);
  return &v;
}

std::string TomlTable::get_string(const std::string& key, const std::string& fallback) {
  const TomlValue* v = find(key, TomlValue::Kind::string, "string");
  return v ? v->str : fallback;
}

int64_t TomlTable::get_int(const std::string& key, int64_t fallback) {
  const TomlValue* v = find(key, TomlValue::Kind::integer, "integer");
  return v ? v->i : fallback;
}

double TomlTable::get_double(const std::string& key, double fallback) {
  const TomlValue* v = find(key, TomlValue::Kind::floating, "number");
  if (!v) return fallback;
  return v->kind == TomlValue::Kind::integer ? static_cast<double>(v->i) : v->f;
}

bool TomlTable::get_bool(const std::string& key, bool fallback) {
  const TomlValue* v = find(key, TomlValue::Kind::boolean, "boolean");
  return v ? v->b : fallback;
}

std::string TomlTable::require_string(const std::string& key) {
  if (!has(key)) fail(ErrorCode::validation, source_ + ": missing required key '" + key + "'");
  return get_string(key, "");
}

int64_t TomlTable::table_array_size(const std::string& name) const {
  int64_t n = 0;
  while (true) {
    const std::string probe = name + "." + std::to_string(n) + ".";
    const auto it = values_.lower_bound(probe);
    if (it == values_.end() || it->first.compare(0, probe.size(), probe) != 0) return n;
    ++n;
  }
}

void TomlTable::require_consumed() const {
  for (const auto& [key, value] : values_)
    if (!consumed_.count(key))
      fail(ErrorCode::validation, source_ + ":" + std::to_string(value.line) +
                                      ": unknown key '" + key + "'");
}

}  // namespace galds
