#pragma once

#include <cmath>
#include <vector>

namespace ollga {

// Cached log-factorials, shared read-only by every probability computation.
class LogFactTable {
 public:
  explicit LogFactTable(int max_n) : table_(static_cast<std::size_t>(max_n) + 1) {
    for (int i = 0; i <= max_n; ++i)
      table_[static_cast<std::size_t>(i)] = std::lgamma(static_cast<double>(i) + 1.0);
  }

  double log_factorial(int k) const { return table_[static_cast<std::size_t>(k)]; }

  double log_binom(int n, int k) const {
    return table_[static_cast<std::size_t>(n)] - table_[static_cast<std::size_t>(k)] -
           table_[static_cast<std::size_t>(n - k)];
  }

  int max_n() const { return static_cast<int>(table_.size()) - 1; }

 private:
  std::vector<double> table_;
};

}  // namespace ollga
