// SPDX-License-Identifier: Apache-2.0

#ifndef COVQ_REPORT_HPP
#define COVQ_REPORT_HPP

#include <string>
#include <vector>

namespace covq {

/// Deterministic CSV table: fixed column set, fixed row order, %.17g
/// number formatting. Identical inputs produce byte-identical files.
class CsvReport {
 public:
  explicit CsvReport(std::string suite);

  void add_row(const std::string& check, const std::string& group,
               const std::string& param1, const std::string& param2, double lhs,
               double rhs, double residual, double tolerance, bool pass);

  bool all_passed() const { return failures_ == 0; }
  int failures() const { return failures_; }
  std::size_t size() const { return rows_.size(); }

  std::string to_string() const;
  void write(const std::string& path) const;

  static std::string format_number(double v);

 private:
  std::string suite_;
  std::vector<std::string> rows_;
  int failures_ = 0;
};

/// "<out_dir>/<name>.csv"
std::string report_path(const std::string& out_dir, const std::string& name);

} // namespace covq

#endif
