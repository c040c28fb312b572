#pragma once

// Text formats: flat key/value config documents and the dataset CSV.
// See docs/formats.md for the schemas.

#include "linkreg/linkage_sim.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace linkreg {

struct KeyValueEntry {
  std::string key;
  std::string value;
  int line = 0;
};

/// `key = value` lines; `#` starts a comment; blank lines ignored.
class KeyValueDocument {
 public:
  static KeyValueDocument parse(std::istream& in, std::string source = "<input>");
  static KeyValueDocument load(const std::filesystem::path& path);

  const std::string& source() const noexcept { return source_; }
  const std::vector<KeyValueEntry>& entries() const noexcept { return entries_; }

  /// The single entry for key; ConfigError if repeated.
  std::optional<KeyValueEntry> get(std::string_view key) const;
  const KeyValueEntry& require(std::string_view key) const;
  std::vector<KeyValueEntry> get_all(std::string_view key) const;

  /// ConfigError naming the line of the first key not in `known`.
  void reject_unknown(const std::set<std::string, std::less<>>& known) const;

  [[noreturn]] void fail(const KeyValueEntry& e, std::string_view what) const;

 private:
  std::string source_;
  std::vector<KeyValueEntry> entries_;
};

double parse_double(std::string_view text);
std::uint64_t parse_uint(std::string_view text);
std::vector<double> parse_double_list(std::string_view text);
std::vector<std::string> split_list(std::string_view text);
/// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);

const std::set<std::string, std::less<>>& scenario_keys();
/// `seed` may be omitted when default_seed is given.
ScenarioConfig parse_scenario(const KeyValueDocument& doc,
                              std::optional<std::uint64_t> default_seed = std::nullopt);
ScenarioConfig load_scenario(const std::filesystem::path& path);
void write_scenario(std::ostream& os, const ScenarioConfig& config);

/// Header x1..xp,y_star,r,d,y_latent; absent d / y_latent are empty fields.
void write_dataset_csv(std::ostream& os, const LinkedDataset& ds);
LinkedDataset read_dataset_csv(std::istream& in, const std::string& source = "<input>");
void save_dataset_csv(const std::filesystem::path& path, const LinkedDataset& ds);
LinkedDataset load_dataset_csv(const std::filesystem::path& path);

}  // namespace linkreg
