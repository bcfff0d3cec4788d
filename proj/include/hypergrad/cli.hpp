#pragma once

#include <iosfwd>

namespace hypergrad {

/// Exit codes: 0 success, 1 usage, 2 data or IO, 3 numerical.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hypergrad
