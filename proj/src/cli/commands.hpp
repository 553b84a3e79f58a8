#pragma once

#include <CLI11.hpp>

#include <stdexcept>

namespace fdsnn::cli {

// Exit codes for the machine-readable error report.
enum Exit { kOk = 0, kError = 1, kFormat = 2, kRefused = 3, kParameter = 4, kUsage = 64 };

// Thrown when a run would be unsafe and --force was not given.
struct Refusal : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void register_commands(CLI::App& app);

}  // namespace fdsnn::cli
