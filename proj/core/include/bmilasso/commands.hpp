#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace bmilasso {

// Shared command-line options. The seed, when set, overrides the config
// seed. Commands create the output directory, write their artifacts there,
// and print one line per artifact; reruns with identical inputs produce
// byte-identical files (no timestamps, fixed float rendering).
struct CommandOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool strict = false;
  bool dry_run = false;
};

// Exit codes: 0 success; 1 usage or config error; 2 runtime failure;
// 3 chains failed the convergence gate under --strict.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitNotConverged = 3;

int cmd_simulate(const CommandOptions& options);
int cmd_impute(const CommandOptions& options);
int cmd_fit(const CommandOptions& options);
int cmd_select(const CommandOptions& options);
int cmd_tune(const CommandOptions& options);
int cmd_report(const CommandOptions& options);

}  // namespace bmilasso
