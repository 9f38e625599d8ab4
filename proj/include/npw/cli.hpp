#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace npw::cli {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsage = 2 };

/// Runs `npw <subcommand> [flags]`; args excludes the program name.
/// Subcommands: verify, split, geodesic, cauchy, converge.
/// Flags: --config <path>, --out <dir>, --seed <u64>, --epsilons <list>.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// FNV-1a (64 bit) of a byte string, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace npw::cli
