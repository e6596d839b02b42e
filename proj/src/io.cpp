#include "ollga/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ollga {

PolicySpec PolicySpec::from_policy(const Policy& p) {
  PolicySpec s;
  s.n = p.n;
  s.binned = false;
  s.lambdas = p.lambdas;
  return s;
}

PolicySpec PolicySpec::from_binned(const BinnedPolicy& p) {
  PolicySpec s;
  s.n = p.scheme.n;
  s.binned = true;
  s.boundaries = p.scheme.boundaries;
  s.lambdas = p.lambdas;
  return s;
}

Policy PolicySpec::to_policy() const {
  if (!binned) return Policy(n, lambdas);
  return BinnedPolicy(BinScheme::from_boundaries(n, boundaries), lambdas).expand();
}

std::vector<int> PolicySpec::capacity_table() const {
  if (capacities.empty()) return {};
  if (!binned) {
    if (capacities.size() != static_cast<std::size_t>(n))
      throw std::invalid_argument("policy document: capacity table must have n entries");
    return capacities;
  }
  const BinScheme scheme = BinScheme::from_boundaries(n, boundaries);
  if (capacities.size() != static_cast<std::size_t>(scheme.k))
    throw std::invalid_argument("policy document: one capacity per bin required");
  std::vector<int> table(static_cast<std::size_t>(n));
  for (int i = 0; i < scheme.k; ++i) {
    const int end = std::min(scheme.bin_end(i), n - 1);
    for (int f = scheme.bin_begin(i); f <= end; ++f)
      table[static_cast<std::size_t>(f)] = capacities[static_cast<std::size_t>(i)];
  }
  return table;
}

std::string PolicySpec::to_json_string() const {
  nlohmann::ordered_json j;
  j["n"] = n;
  j["kind"] = binned ? "binned" : "table";
  if (binned) j["boundaries"] = boundaries;
  // Serialize lambdas as full-precision strings so round-trips are lossless.
  std::vector<std::string> vals;
  vals.reserve(lambdas.size());
  for (double v : lambdas) vals.push_back(fmt_full(v));
  j["lambdas"] = vals;
  if (!capacities.empty()) j["capacities"] = capacities;
  return j.dump(2) + "\n";
}

PolicySpec PolicySpec::from_json_string(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  PolicySpec s;
  s.n = j.at("n").get<int>();
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "binned") {
    s.binned = true;
    s.boundaries = j.at("boundaries").get<std::vector<int>>();
  } else if (kind != "table") {
    throw std::invalid_argument("policy document: kind must be 'table' or 'binned'");
  }
  for (const auto& v : j.at("lambdas")) {
    if (v.is_string())
      s.lambdas.push_back(std::stod(v.get<std::string>()));
    else
      s.lambdas.push_back(v.get<double>());
  }
  if (j.contains("capacities")) s.capacities = j.at("capacities").get<std::vector<int>>();
  return s;
}

std::string PolicySpec::to_csv_string() const {
  const Policy p = to_policy();
  std::ostringstream out;
  out << "fitness,lambda\n";
  for (int f = 0; f < p.n; ++f) out << f << ',' << fmt_full(p.lambda_at(f)) << '\n';
  return out.str();
}

PolicySpec PolicySpec::from_csv_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<double> lambdas;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("fitness", 0) == 0) continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("policy csv: expected 'fitness,lambda' rows");
    const int f = std::stoi(line.substr(0, comma));
    if (f != static_cast<int>(lambdas.size()))
      throw std::invalid_argument("policy csv: fitness column must be 0,1,2,...");
    lambdas.push_back(std::stod(line.substr(comma + 1)));
  }
  PolicySpec s;
  s.n = static_cast<int>(lambdas.size());
  s.lambdas = std::move(lambdas);
  return s;
}

PolicySpec load_policy_file(const std::string& path) {
  const std::string text = read_text_file(path);
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv")
    return PolicySpec::from_csv_string(text);
  return PolicySpec::from_json_string(text);
}

void save_policy_file(const PolicySpec& spec, const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv")
    write_text_file(path, spec.to_csv_string());
  else
    write_text_file(path, spec.to_json_string());
}

std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_sig(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t file_digest(const std::string& path) {
  const std::string text = read_text_file(path);
  return fnv1a64(text.data(), text.size());
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << contents;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ollga
