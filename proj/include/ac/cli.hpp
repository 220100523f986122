#pragma once

namespace ac {

// The aclm command line: build-vocab | train | eval | suggest |
// analyze-params | analyze-oov | pareto | theory-table | pipeline.
// Returns the process exit code; errors print one line to stderr.
int cli_main(int argc, const char* const* argv);

}  // namespace ac
