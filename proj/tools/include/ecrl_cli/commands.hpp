#pragma once

#include "ecrl_cli/config.hpp"
#include "ecrl_cli/verify.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ecrl::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2 };

struct RunOptions {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::vector<std::string> overrides;
  std::string out_dir = "runs";
  bool quiet = false;
};

/// Preset or file, then --set overrides, then --variant and --seed.
Config resolve_config(const RunOptions& options, const std::string& fallback = "reach2d_ecrl");

struct RunManifest {
  std::string run_id;
  std::string directory;
  std::string metrics_csv;
  std::string summary_json;
  std::string checkpoint;
};

RunManifest make_manifest(const Config& config, const std::string& out_dir, const std::string& prefix = "");

int cmd_train(const RunOptions& options, std::ostream& out, std::ostream& err);
int cmd_train_offline(const RunOptions& options, const std::string& dataset, std::ostream& out, std::ostream& err);
int cmd_eval(const RunOptions& options, const std::string& checkpoint, std::size_t goals, const std::string& mode,
             std::ostream& out, std::ostream& err);
int cmd_verify(const VerifyOptions& options, std::ostream& out, std::ostream& err);
int cmd_oracle(std::size_t n, double gamma, double tol, const std::string& group, std::ostream& out,
               std::ostream& err);

struct ExportOptions {
  std::string policy = "scripted";
  std::size_t episodes = 10;
  double noise = 0.3;
  std::string checkpoint;
  std::string output;
};
int cmd_export_dataset(const RunOptions& options, const ExportOptions& export_options, std::ostream& out,
                       std::ostream& err);

/// Full command line entry point.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ecrl::cli
