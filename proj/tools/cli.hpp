// SPDX-License-Identifier: Apache-2.0

#ifndef ICA_TOOLS_CLI_HPP_
#define ICA_TOOLS_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace ica::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `ica` invocation. `args` excludes the program name. Data goes to
/// `out` (or files named by flags), diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace ica::cli

#endif  // ICA_TOOLS_CLI_HPP_
