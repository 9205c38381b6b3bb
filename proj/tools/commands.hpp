#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "run_config.hpp"

namespace wchaos::cli {

struct OutputFile {
  std::string name;
  std::string content;
};

struct RunResult {
  std::vector<OutputFile> files;  // manifest.json last
  /// Failed verdicts in a report run; informational, not an error.
  std::size_t fail_count = 0;
};

/// Runs the configured command over every point, `threads` points at a time.
/// Outputs depend only on the config, never on the thread count.
RunResult run(const RunConfig& cfg, unsigned threads);

/// Exit code for an exception escaping run() or parse_config().
int exit_code_for(const std::exception& e);

}  // namespace wchaos::cli
