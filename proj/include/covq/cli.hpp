// SPDX-License-Identifier: Apache-2.0

#ifndef COVQ_CLI_HPP
#define COVQ_CLI_HPP

#include <string>
#include <vector>

#include "covq/config.hpp"

namespace covq {

// Exit code contract: 0 all checks pass, 1 tolerance/property failure,
// 2 usage or config error (including windows rejected as truncation-
// dominated and partitions too coarse to extract from).

int run_verify_duflo(const RunConfig& cfg, const std::string& out_dir);
int run_build_povm(const RunConfig& cfg, const std::string& out_dir,
                   const std::string& density_spec);
int run_check_covariance(const RunConfig& cfg, const std::string& out_dir,
                         bool inject_broken);
int run_roundtrip(const RunConfig& cfg, const std::string& out_dir, bool inject_broken);
int run_report(const std::string& out_dir);

/// Full argv-style entry used by the covq binary and the test harness.
int run_cli(const std::vector<std::string>& args);

} // namespace covq

#endif
