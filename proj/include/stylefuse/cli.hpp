// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <set>
#include <string>

namespace stylefuse {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 2,     // invalid flags or configuration
    kExitIo = 3,        // unreadable input or unwritable output
    kExitPipeline = 4,  // failure while running the pipeline
};

/// Parses "4-11", "3,5,7", "3-5,9" or "" (no layers). Throws ConfigError.
std::set<int> parse_layer_set(const std::string& text);

/// Entry point behind the `stylefuse` binary; subcommands transfer, sweep,
/// ablate, invert, metrics and serve.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stylefuse
