#pragma once

namespace panrec {

/// Entry point of the `panrec` tool. Exit codes: 0 success, 1 unexpected
/// failure, 2 usage, 3 I/O, 4 contract or argument violation. Failures print
/// one JSON object {"error", "message"} on stderr.
int cli_main(int argc, char** argv);

}  // namespace panrec
