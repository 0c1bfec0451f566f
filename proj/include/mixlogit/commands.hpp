#ifndef MIXLOGIT_COMMANDS_HPP
#define MIXLOGIT_COMMANDS_HPP

#include <optional>
#include <string>

#include "mixlogit/config.hpp"

namespace mixlogit {

struct CommandOptions {
  int jobs = 1;
  std::optional<std::uint64_t> seed;  // overrides the config seeds
};

// simulate: one directory per replication with train/validation CSVs, true
// taste sidecars and a scenario echo (replication seeds are base + index).
void cmd_simulate(const RunConfig& cfg, const CommandOptions& opts);

// fit: run the configured sampler on the training data and persist the draws
// directory (plus a timing sidecar outside the deterministic payload).
void cmd_fit(const RunConfig& cfg, const CommandOptions& opts);

// evaluate: TVD against the synthetic truth (when the true-taste sidecar is
// available), train/validation LPPD, p_WAIC, WAIC and fit runtime, written as
// a metrics CSV with columns method,replication,metric,value.
void cmd_evaluate(const RunConfig& cfg, const CommandOptions& opts);

// report: per-(method, metric) mean and standard error across replication
// metrics files, plus WTP percentile/CDF tables for WTP-space draws.
void cmd_report(const RunConfig& cfg, const CommandOptions& opts);

// Dispatch plus exit-code mapping: 0 success, 2 config/input error,
// 3 runtime/sampler error. Errors are reported on stderr.
int run_command(const std::string& command, const std::string& config_path,
                const CommandOptions& opts);

}  // namespace mixlogit

#endif  // MIXLOGIT_COMMANDS_HPP
