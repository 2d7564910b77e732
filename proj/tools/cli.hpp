#pragma once

#include <ostream>
#include <span>
#include <string>

namespace infooirt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitModuleError = 1;
inline constexpr int kExitUsage = 2;

/// Dispatches `args` (without the program name) to a subcommand: synth,
/// ingest, train, eval, sweep, mi-curve, recover or report. Results go to
/// `out`, diagnostics and progress to `err`.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace infooirt::cli
