#pragma once

#include <iostream>

namespace painter {

/// Entry point of the `painter` tool. Returns 0 on success, 1 on usage
/// errors, 2 on runtime errors.
int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace painter
