#pragma once

#include <iosfwd>

namespace dpo {

/// Entry point of the command-line tool. Exit codes: 0 success, 1 usage or
/// validation failure, 2 runtime failure.
int cli_main(int argc, const char* const* argv, std::ostream& out,
             std::ostream& err);

}  // namespace dpo
