#pragma once

#include <iosfwd>

namespace rlp::bench {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // a verification check failed, or a run failed at runtime
inline constexpr int kExitUsage = 2;

/// Entry point of the rlp_forge tool. Subcommands: train, verify, bench,
/// compare, gen-corpus.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rlp::bench
