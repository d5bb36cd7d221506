#pragma once

#include <iosfwd>
#include <string_view>

namespace oppi::cli {

/// Process exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

/// Entry point behind the `oppi` executable; `env_seed` stands in for $OPPI_SEED.
/// Regular output goes to `out`, the resolved configuration and diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, std::string_view env_seed = {});

}  // namespace oppi::cli
