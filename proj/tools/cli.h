#ifndef SKEWFAIR_TOOLS_CLI_H_
#define SKEWFAIR_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace skewfair::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

// Runs one invocation. `args` excludes the program name. Returns the process
// exit code: 0 on success, 1 on a validation or usage error, 2 on I/O errors.
int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace skewfair::cli

#endif  // SKEWFAIR_TOOLS_CLI_H_
