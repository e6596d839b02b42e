#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ollga/policy.hpp"

namespace ollga {

// On-disk policy document: either a dense per-fitness table or a binned
// policy, optionally carrying explicit population sizes (one per entry).
struct PolicySpec {
  int n = 0;
  bool binned = false;
  std::vector<int> boundaries;       // binned only
  std::vector<double> lambdas;       // n entries (table) or k entries (binned)
  std::vector<int> capacities;       // optional, same length as lambdas

  static PolicySpec from_policy(const Policy& p);
  static PolicySpec from_binned(const BinnedPolicy& p);

  Policy to_policy() const;
  // Empty when no capacities are present; expanded per fitness otherwise.
  std::vector<int> capacity_table() const;
  bool has_capacities() const { return !capacities.empty(); }

  std::string to_json_string() const;
  static PolicySpec from_json_string(const std::string& text);
  std::string to_csv_string() const;              // fitness,lambda (dense table)
  static PolicySpec from_csv_string(const std::string& text);
};

PolicySpec load_policy_file(const std::string& path);
void save_policy_file(const PolicySpec& spec, const std::string& path);

// Shortest text that parses back to exactly the same double (17 significant
// digits always round-trips).
std::string fmt_full(double v);
std::string fmt_sig(double v, int digits);

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t file_digest(const std::string& path);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

}  // namespace ollga
