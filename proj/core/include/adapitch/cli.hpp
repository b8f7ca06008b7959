#pragma once

namespace adapitch {

// Command-line entry point. Subcommands: gen-corpus, pretrain-t2t,
// pretrain-m2m, train, synth, eval. Exit codes: 0 success, 2 usage or config
// error, 3 training divergence, 4 I/O failure. ADAPITCH_SEED overrides the
// default seed when no --seed is given.
int run_cli(int argc, const char* const* argv);

}  // namespace adapitch
