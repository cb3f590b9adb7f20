#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace gamescope::io {

/// Plain-text run configuration: one `key = value` per line, `#` starts a
/// comment, blank lines are ignored. Later assignments override earlier ones.
class Config {
 public:
  /// FormatError naming the source and line on malformed input.
  static Config parse(std::istream& in, const std::string& source = "<config>");
  /// FormatError when the file cannot be read.
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  /// Parses `key=value`; FormatError without '='.
  void set_assignment(const std::string& assignment);
  bool has(const std::string& key) const;

  /// Typed getters return the fallback when the key is absent and throw
  /// FormatError when the value does not parse.
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated reals.
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

  /// FormatError listing keys outside `known`.
  void require_known(const std::vector<std::string>& known) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }
  /// Sorted `key = value` lines.
  void write(std::ostream& out) const;

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace gamescope::io
