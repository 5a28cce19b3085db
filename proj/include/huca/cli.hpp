#pragma once

#include <optional>
#include <string>

#include "huca/config.hpp"

namespace huca::cli {

struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scenario;
  std::optional<int> piles;
  std::optional<int> episodes;
  std::optional<std::string> ablation;
  std::optional<double> rho;
  std::string out = "runs/run";
  std::optional<std::string> load_csv;
  std::optional<std::string> price_csv;
  std::optional<int> synthetic_days;
  std::optional<int> eval_days;
  std::string policy = "trained";  // trained | random | max-charge
  std::optional<std::string> run_dir;
  std::optional<std::string> from_manifest;
};

// Output root resolution: HUCA_RUN_DIR, when set, prefixes relative paths.
std::string resolve_out_dir(const std::string& out);

// defaults -> manifest (when reproducing) -> config file -> CLI flags.
RunConfig resolve_config(const CliOptions& opts);

struct TraceSource {
  sim::TraceSet traces;
  std::string mode;  // "files" or "synthetic"
  std::string load_csv;
  std::string price_csv;
  int days = 0;
  std::string content_hash;
};

TraceSource resolve_traces(const CliOptions& opts, const RunConfig& cfg);

int cmd_train(const CliOptions& opts);
int cmd_eval(const CliOptions& opts);
int cmd_ablate(const CliOptions& opts);
int cmd_oracle(const CliOptions& opts);

// Shared by main(): runs a command and converts exceptions into a
// machine-readable error record on stderr with a nonzero exit code.
int run_command(const std::string& name, const CliOptions& opts);

}  // namespace huca::cli
