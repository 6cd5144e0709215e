// SPDX-License-Identifier: Apache-2.0

#include "covq/report.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace covq {

CsvReport::CsvReport(std::string suite) : suite_(std::move(suite)) {}

std::string CsvReport::format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void CsvReport::add_row(const std::string& check, const std::string& group,
                        const std::string& param1, const std::string& param2, double lhs,
                        double rhs, double residual, double tolerance, bool pass) {
  std::string row = suite_;
  row += ',';
  row += check;
  row += ',';
  row += group;
  row += ',';
  row += param1;
  row += ',';
  row += param2;
  row += ',';
  row += format_number(lhs);
  row += ',';
  row += format_number(rhs);
  row += ',';
  row += format_number(residual);
  row += ',';
  row += format_number(tolerance);
  row += ',';
  row += pass ? "pass" : "FAIL";
  rows_.push_back(std::move(row));
  if (!pass) ++failures_;
}

std::string CsvReport::to_string() const {
  std::string out = "suite,check,group,param1,param2,lhs,rhs,residual,tolerance,status\n";
  for (const auto& r : rows_) {
    out += r;
    out += '\n';
  }
  return out;
}

void CsvReport::write(const std::string& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write report: " + path);
  f << to_string();
}

std::string report_path(const std::string& out_dir, const std::string& name) {
  if (out_dir.empty()) return name + ".csv";
  const char last = out_dir.back();
  return last == '/' ? out_dir + name + ".csv" : out_dir + "/" + name + ".csv";
}

} // namespace covq
