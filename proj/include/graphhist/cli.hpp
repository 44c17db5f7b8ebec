#pragma once

namespace graphhist {

/// Entry point behind the graphhist binary; returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace graphhist
