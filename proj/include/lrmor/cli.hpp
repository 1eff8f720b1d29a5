// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lrmor::cli
{

enum ExitCode : int
{
    ok = 0,
    usage = 1,
    numerical = 2
};

/// Entry point of the `lrmor` tool. `args[0]` is the program name.
///
/// Subcommands: lyap, care, bt, irka, pmor-piecewise, pmor-interp,
/// sigma-grid, gen-bench. Returns 0 on success, 1 on usage or input errors
/// and 2 on numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv);

} // namespace lrmor::cli
