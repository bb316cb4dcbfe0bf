#pragma once

// Equivariance, invariance and gradient property suite on randomly
// initialised networks.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ecrl::cli {

struct VerifyOptions {
  std::string group = "c8";
  std::size_t k = 64;
  std::size_t hidden_blocks = 16;
  std::size_t samples = 100;
  std::uint64_t seed = 0;
  /// Negative control: build networks without the weight projection.
  bool skip_projection = false;
};

struct CheckResult {
  std::string name;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

std::vector<CheckResult> run_property_suite(const VerifyOptions& options);
void print_check_table(std::ostream& out, const std::vector<CheckResult>& checks);

}  // namespace ecrl::cli
