#include "termforge/config.hpp"

#include <charconv>

#include "termforge/error.hpp"
#include "termforge/io.hpp"

namespace termforge {

Config Config::parse(std::string_view text) {
  Config c;
  std::size_t line_no = 0;
  for (const auto& raw : io::split(text, '\n')) {
    ++line_no;
    auto line = io::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", line_no);
    auto key = io::trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", line_no);
    c.values_[std::string(key)] = std::string(io::trim(line.substr(eq + 1)));
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) { return parse(io::read_file(path)); }

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

void Config::apply_override(std::string_view assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string_view::npos || io::trim(assignment.substr(0, eq)).empty()) {
    throw UsageError("--set expects key=value, got '" + std::string(assignment) + "'");
  }
  set(std::string(io::trim(assignment.substr(0, eq))), std::string(io::trim(assignment.substr(eq + 1))));
}

const std::string& Config::require(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) throw UsageError("missing config key '" + key + "'");
  return it->second;
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

long Config::get_int(const std::string& key, long fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  long v = 0;
  const auto& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw UsageError("'" + key + "' must be an integer");
  return v;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return io::parse_double(it->second);
  } catch (const ParseError&) {
    throw UsageError("'" + key + "' must be a number");
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const auto& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("'" + key + "' must be true or false");
}

std::vector<std::string> Config::get_list(const std::string& key, const std::vector<std::string>& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<std::string> out;
  for (const auto& item : io::split(it->second, ',')) {
    auto t = io::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::string Config::format() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

}  // namespace termforge
