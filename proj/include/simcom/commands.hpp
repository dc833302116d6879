#pragma once

// The three operator commands behind the `simcom` executable.

#include "simcom/protocol.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace simcom {

inline constexpr const char* kVersion = "simcom 0.1.0";
inline constexpr const char* kOutDirEnv = "SIMCOM_OUT_DIR";

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2, kExitPartial = 3 };

struct CommandOptions {
  /// Config text file, or a sweep manifest (.json) whose snapshot is reused.
  std::string config_path;
  std::string out_dir = "results";
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<Method>> methods;
  unsigned threads = 1;
  /// Progress messages; null for silence.
  std::ostream* log = nullptr;
};

/// Defaults, then the config file, then the command-line overrides.
/// `--seed` replaces the corpus seed for generate and the grid seeds for sweep.
ExperimentConfig resolve_config(const CommandOptions& options, bool for_sweep);

/// Writes <out>/corpus.jsonl. Returns its path.
std::string cmd_generate(const CommandOptions& options);

/// Writes <out>/manifest.json (before the first round), <out>/config.snapshot
/// and one <out>/<grid key>.csv per grid point. Returns kExitPartial when any
/// grid point failed.
int cmd_sweep(const CommandOptions& options);

/// Reads every round-log CSV in `results_dir` and writes summary.csv plus
/// figure CSV/SVG pairs under <results_dir>/report (or options.out_dir when
/// set). Throws NoDataError when there is nothing to read. Returns the
/// number of figures.
std::size_t cmd_report(const std::string& results_dir, const std::string& report_dir = {},
                       std::ostream* log = nullptr);

}  // namespace simcom
