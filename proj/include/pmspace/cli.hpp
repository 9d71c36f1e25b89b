#pragma once

#include <iosfwd>

namespace pmspace {

/// Runs one `pmspace` command. Exit codes: 0 success, 1 domain error, 2 usage
/// error. JSON and OBJ go to `out` unless an output path is given; diagnostics
/// go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pmspace
