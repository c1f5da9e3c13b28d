#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace slowfast {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key-value text with [section] headers and '#' comments, parsed
// strictly: malformed lines, duplicate keys, unknown sections and unused
// keys are all errors. The [run] section written into manifests is carried
// but never interpreted, so a manifest is itself a valid config.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::filesystem::path& path);
  static ConfigFile parse_string(const std::string& text,
                                 const std::string& origin = "<string>");

  bool has_section(const std::string& section) const;
  bool has_key(const std::string& section, const std::string& key) const;

  // Typed access; every get marks the key consumed.
  std::string get_string(const std::string& section, const std::string& key);
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback);
  double get_double(const std::string& section, const std::string& key);
  double get_double(const std::string& section, const std::string& key,
                    double fallback);
  std::int64_t get_int(const std::string& section, const std::string& key);
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback);
  std::uint64_t get_uint64(const std::string& section, const std::string& key,
                           std::uint64_t fallback);
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback);
  std::vector<double> get_double_list(const std::string& section,
                                      const std::string& key);

  // Rejects any key never consumed and any section outside `allowed`
  // ([run] is always tolerated).
  void finish(const std::set<std::string>& allowed_sections) const;

  // Sections and keys in file order, for manifests.
  const std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>&
  ordered() const {
    return ordered_;
  }

 private:
  std::string origin_;
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>
      ordered_;
  std::map<std::string, std::map<std::string, std::string>> values_;
  mutable std::map<std::string, std::set<std::string>> consumed_;

  const std::string* find(const std::string& section,
                          const std::string& key) const;
  std::string require(const std::string& section, const std::string& key);
};

}  // namespace slowfast
