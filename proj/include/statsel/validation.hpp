#pragma once

#include <string>
#include <vector>

#include "statsel/oracle.hpp"

namespace statsel {

/// Fast checks of the numerical kernels against the oracle module:
/// scalar fixed point, SISO rate, water-filling, rank-one update, greedy vs
/// exhaustive search, relaxed covariance solver and the two rate kernels.
std::vector<oracle::OracleReport> run_kernel_suite();

struct DeAccuracyOptions {
  int instances = 5;
  int mc_samples = 2000;
  double tolerance = 0.03;  // relative
};

/// Desk instances with uniform power and a random subset; DE vs Monte-Carlo
/// for both decoding modes.
std::vector<oracle::OracleReport> run_de_accuracy_suite(const DeAccuracyOptions& options = {});

/// Suite by name: "kernels", "de-accuracy" or "all". Throws
/// std::invalid_argument for other names.
std::vector<oracle::OracleReport> run_suite(const std::string& name);

bool all_pass(const std::vector<oracle::OracleReport>& reports);

}  // namespace statsel
