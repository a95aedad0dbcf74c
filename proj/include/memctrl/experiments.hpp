#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "memctrl/config.hpp"
#include "memctrl/semilinear.hpp"

namespace memctrl {

/// History samples, clamp and the nonlinearity resolved from a config.
struct ResolvedHistory {
    HistoryFunction psi;
    double horizon;
    double clamp;
};

[[nodiscard]] ResolvedHistory resolve_history(const RunConfig& cfg);

/// Assembles the full steering problem. With zero_actuators, B = 0 and E_k = 0.
[[nodiscard]] ControlProblem build_problem(const RunConfig& cfg, bool zero_actuators = false);

[[nodiscard]] SemilinearSettings semilinear_settings(const RunConfig& cfg);

struct RunOptions {
    std::string out_dir;  // empty: the config's output.dir
    std::optional<double> alpha;
    std::uint64_t seed = 0;
    int threads = 1;
    /// Record measured wall time; otherwise wall_ms is written as 0 so that
    /// identical configs give byte-identical CSV files.
    bool timing = false;
};

enum ExitCode : int { kOk = 0, kFailure = 1, kValidation = 2, kSolver = 3 };

/// Runs one subcommand: resolvent, gramian, limit, steer, sweep, paper-demo.
int run_subcommand(const std::string& name, const RunConfig& cfg, const RunOptions& opts, std::ostream& out,
                   std::ostream& err);

/// Worker count from MEMCTRL_THREADS (default: hardware concurrency).
[[nodiscard]] int thread_budget();

}  // namespace memctrl
