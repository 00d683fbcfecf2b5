#include "keyrep/config.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "keyrep/error.h"

namespace keyrep {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

double parse_double(std::string_view text, std::string_view what) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ParseError(std::string(what) + ": expected a finite number, got '" +
                     std::string(text) + "'");
  }
  return v;
}

long parse_int(std::string_view text, std::string_view what) {
  text = trim(text);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(std::string(what) + ": expected an integer, got '" +
                     std::string(text) + "'");
  }
  return v;
}

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig cfg;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = trim(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("expected 'key = value'", line_no);
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError("empty key", line_no);
    if (cfg.values_.count(key)) throw ParseError("duplicate key '" + key + "'", line_no);
    cfg.values_[key] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

void KeyValueConfig::set_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ParseError("override must look like key=value, got '" +
                     std::string(assignment) + "'");
  }
  const std::string key(trim(assignment.substr(0, eq)));
  if (key.empty()) throw ParseError("override has an empty key");
  set(key, std::string(trim(assignment.substr(eq + 1))));
}

bool KeyValueConfig::has(const std::string& key) const { return values_.count(key) > 0; }

const std::string& KeyValueConfig::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
  used_.insert(key);
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
  return has(key) ? raw(key) : fallback;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? parse_double(raw(key), key) : fallback;
}

long KeyValueConfig::get_int(const std::string& key, long fallback) const {
  return has(key) ? parse_int(raw(key), key) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = raw(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParseError(key + ": expected a boolean, got '" + v + "'");
}

std::vector<std::string> KeyValueConfig::get_list(
    const std::string& key, const std::vector<std::string>& fallback) const {
  if (!has(key)) return fallback;
  std::string v = raw(key);
  for (char& c : v) {
    if (c == ',') c = ' ';
  }
  std::istringstream ss(v);
  std::vector<std::string> out;
  for (std::string item; ss >> item;) out.push_back(item);
  return out;
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : get_list(key, {})) out.push_back(parse_double(item, key));
  return out;
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (!used_.count(k)) out.push_back(k);
  }
  return out;
}

}  // namespace keyrep
