// Acceptance suite: one scenario per criterion, full-scale parameters.
// Run with no arguments for the whole battery, or --criterion N for one.
// Exit code is the number of failing criteria.

#include <cstdio>
#include <cstring>
#include <functional>
#include <vector>

#include "fletchsim/selfcheck.hpp"

using namespace fletchsim;

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--criterion") && i + 1 < argc) {
            only = std::atoi(argv[i + 1]);
        }
    }
    constexpr uint64_t seed = 42;

    std::vector<std::pair<int, std::function<CheckResult()>>> suite = {
        {1, [] { return check_fig3_replay(); }},
        {2, [] { return check_path_closure_fuzz(10000, seed); }},
        {3, [] { return check_lock_balance_adversity(100000, 0.30, seed); }},
        {4, [] { return check_sequence_dedup(seed); }},
        {5, [] { return check_collision_correctness(100000, seed); }},
        {6, [] { return check_multipath_atomicity(10000, seed); }},
        {7, [] { return check_write_through(60000, seed); }},
        {8, [] { return check_recirculation_formulas(); }},
        {9, [] { return check_lock_mode_contrast(40000, seed); }},
        {10, [] { return check_directional_throughput(400000, seed); }},
        {11, [] { return check_chmod_monotonicity(150000, seed); }},
        {12, [] { return check_cms_soundness(1000000, seed); }},
        {13, [] { return check_workload_statistics(1000000, seed); }},
        {14, [] { return check_hot_in_responsiveness(seed); }},
    };

    int failures = 0;
    for (const auto& [num, fn] : suite) {
        if (only && num != only) continue;
        CheckResult res = fn();
        std::printf("criterion %2d %-24s %s  %s\n", num, res.name.c_str(),
                    res.pass ? "PASS" : "FAIL", res.detail.c_str());
        std::fflush(stdout);
        if (!res.pass) ++failures;
    }
    return failures;
}
