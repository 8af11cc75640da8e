#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace upen {

/// Plain-text key/value configuration with sections:
///
///     # comment
///     [run]
///     task = pointgoal
///     [policy]
///     alpha1 = 0.1
///
/// Keys are addressed as "section.key". Every key has a default and unknown keys are rejected.
class Config {
 public:
  Config();

  void load(const std::string& path);
  void parse(std::istream& in, const std::string& origin = "<stream>");
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  /// Every key in the documented file format, sorted by section.
  std::string dump() const;
  static bool known_key(const std::string& key);

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace upen
