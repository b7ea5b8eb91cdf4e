#pragma once

// Internal helpers shared by the command implementations.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "gmf/cli.hpp"

namespace gmf::cli {

/// View of one JSON object that records which keys were read, so that
/// finish() can reject unknown keys by their full dotted path.
class Section {
 public:
  Section(const Json& j, std::string path);

  bool has(const std::string& key) const;
  double number(const std::string& key);
  double number(const std::string& key, double fallback);
  std::int64_t integer(const std::string& key);
  std::int64_t integer(const std::string& key, std::int64_t fallback);
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback);
  std::string string(const std::string& key);
  std::string string(const std::string& key, const std::string& fallback);
  std::vector<double> numbers(const std::string& key);
  Section child(const std::string& key);
  Section child_or_empty(const std::string& key);
  void touch(const std::string& key) { used_.insert(key); }
  void finish() const;

 private:
  const Json& raw(const std::string& key);
  std::string key_path(const std::string& key) const;

  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

struct CommonSetup {
  estimators::RunConfig run;
  Json normalized = Json::object();
};

CommonSetup parse_common(Section& top, const RunOptions& opts, bool need_beta2);
void parse_tilt(Section& top, CommonSetup& s, const std::string& default_policy);

}  // namespace gmf::cli
