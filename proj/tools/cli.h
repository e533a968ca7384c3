#ifndef KBC_TOOLS_CLI_H_
#define KBC_TOOLS_CLI_H_

#include <string>
#include <vector>

namespace kbc::cli {

// Exit status: 0 success, 1 runtime failure, 2 usage or validation error.
int Run(int argc, const char* const* argv);
// args excludes the program name.
int Run(const std::vector<std::string>& args);

}  // namespace kbc::cli

#endif  // KBC_TOOLS_CLI_H_
