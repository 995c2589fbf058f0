// Command-line entry point. One subcommand per invocation: ingest, kcore,
// split, train, eval, bench, synth. Every run echoes its fully-resolved
// config to <out_dir>/resolved_config.toml.
#pragma once

namespace hicom {

// Exit status: 0 on success, 2 on usage or config errors, 1 otherwise.
int cli_dispatch(int argc, char** argv);

}  // namespace hicom
