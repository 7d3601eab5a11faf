#pragma once

#include <string>
#include <vector>

namespace fletchsim {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Scenario and property suites, one per acceptance criterion. Each is
// self-contained: it builds its own simulation(s), runs, and verifies.
CheckResult check_fig3_replay();
CheckResult check_path_closure_fuzz(uint64_t min_actions, uint64_t seed);
CheckResult check_lock_balance_adversity(uint64_t ops, double loss,
                                         uint64_t seed);
CheckResult check_sequence_dedup(uint64_t seed);
CheckResult check_collision_correctness(uint64_t ops, uint64_t seed);
CheckResult check_multipath_atomicity(uint64_t min_overlaps, uint64_t seed);
CheckResult check_write_through(uint64_t ops, uint64_t seed);
CheckResult check_recirculation_formulas();
CheckResult check_lock_mode_contrast(uint64_t ops, uint64_t seed);
CheckResult check_directional_throughput(uint64_t ops, uint64_t seed);
CheckResult check_chmod_monotonicity(uint64_t ops, uint64_t seed);
CheckResult check_cms_soundness(uint64_t stream_len, uint64_t seed);
CheckResult check_workload_statistics(uint64_t ops, uint64_t seed);
CheckResult check_hot_in_responsiveness(uint64_t seed);

// Scaled-down battery for the CLI `check` subcommand.
std::vector<CheckResult> run_quick_checks(uint64_t seed);

}  // namespace fletchsim
