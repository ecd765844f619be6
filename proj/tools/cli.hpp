#ifndef GLS_TOOLS_CLI_HPP
#define GLS_TOOLS_CLI_HPP

#include <iosfwd>

namespace gls::cli {

/// Exit codes: 0 success, 1 validation or solver failure, 2 usage, IO or parse error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace gls::cli

#endif // GLS_TOOLS_CLI_HPP
