#include "slowfast/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace slowfast {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path.string());
}

ConfigFile ConfigFile::parse_string(const std::string& text,
                                    const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": empty section name");
      if (!cfg.values_.count(section)) {
        cfg.values_[section] = {};
        cfg.ordered_.push_back({section, {}});
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected key = value");
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    auto& sec = cfg.values_[section];
    if (sec.count(key))
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": duplicate key '" + key + "'");
    sec[key] = value;
    for (auto& [name, kvs] : cfg.ordered_)
      if (name == section) kvs.push_back({key, value});
  }
  return cfg;
}

bool ConfigFile::has_section(const std::string& section) const {
  return values_.count(section) != 0;
}

bool ConfigFile::has_key(const std::string& section,
                         const std::string& key) const {
  const auto it = values_.find(section);
  return it != values_.end() && it->second.count(key) != 0;
}

const std::string* ConfigFile::find(const std::string& section,
                                    const std::string& key) const {
  const auto it = values_.find(section);
  if (it == values_.end()) return nullptr;
  const auto kt = it->second.find(key);
  if (kt == it->second.end()) return nullptr;
  consumed_[section].insert(key);
  return &kt->second;
}

std::string ConfigFile::require(const std::string& section,
                                const std::string& key) {
  const std::string* v = find(section, key);
  if (!v)
    throw ConfigError(origin_ + ": missing required key [" + section + "] " +
                      key);
  return *v;
}

std::string ConfigFile::get_string(const std::string& section,
                                   const std::string& key) {
  return require(section, key);
}

std::string ConfigFile::get_string(const std::string& section,
                                   const std::string& key,
                                   const std::string& fallback) {
  const std::string* v = find(section, key);
  return v ? *v : fallback;
}

double ConfigFile::get_double(const std::string& section,
                              const std::string& key) {
  const std::string s = require(section, key);
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": [" + section + "] " + key +
                      " is not a number: '" + s + "'");
  }
}

double ConfigFile::get_double(const std::string& section,
                              const std::string& key, double fallback) {
  return has_key(section, key) ? get_double(section, key) : fallback;
}

std::int64_t ConfigFile::get_int(const std::string& section,
                                 const std::string& key) {
  const std::string s = require(section, key);
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError(origin_ + ": [" + section + "] " + key +
                      " is not an integer: '" + s + "'");
  return v;
}

std::int64_t ConfigFile::get_int(const std::string& section,
                                 const std::string& key, std::int64_t fallback) {
  return has_key(section, key) ? get_int(section, key) : fallback;
}

std::uint64_t ConfigFile::get_uint64(const std::string& section,
                                     const std::string& key,
                                     std::uint64_t fallback) {
  if (!has_key(section, key)) return fallback;
  const std::string s = require(section, key);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError(origin_ + ": [" + section + "] " + key +
                      " is not an unsigned integer: '" + s + "'");
  return v;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) {
  if (!has_key(section, key)) return fallback;
  const std::string s = require(section, key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(origin_ + ": [" + section + "] " + key +
                    " is not a boolean: '" + s + "'");
}

std::vector<double> ConfigFile::get_double_list(const std::string& section,
                                                const std::string& key) {
  const std::string s = require(section, key);
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ": [" + section + "] " + key +
                        " has a non-numeric entry: '" + item + "'");
    }
  }
  if (out.empty())
    throw ConfigError(origin_ + ": [" + section + "] " + key + " is empty");
  return out;
}

void ConfigFile::finish(const std::set<std::string>& allowed_sections) const {
  for (const auto& [section, keys] : values_) {
    if (section == "run") continue;  // manifest bookkeeping, never interpreted
    if (!allowed_sections.count(section))
      throw ConfigError(origin_ + ": unknown section [" + section + "]");
    const auto used = consumed_.find(section);
    for (const auto& [key, value] : keys) {
      if (used == consumed_.end() || !used->second.count(key))
        throw ConfigError(origin_ + ": unknown key '" + key + "' in [" +
                          section + "]");
    }
  }
}

}  // namespace slowfast
