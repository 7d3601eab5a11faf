#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fletchsim/metrics.hpp"
#include "fletchsim/sim_config.hpp"
#include "fletchsim/workload.hpp"

namespace fletchsim {

struct ExperimentRun {
    std::string label;
    SimConfig config;
    WorkloadSpec workload;
    uint64_t trace_ops = 300000;
    bool dynamic = false;  // online sampling (hot-in patterns)
};

// Scaled-down experiment matrices. Names: exp1 (workload x scheme x
// servers), exp3 (chmod ratio sweep), exp5 (frequency assignment order),
// exp6 (skew sweep), exp7 (depth sweep), exp8 (hot-in dynamics).
std::optional<std::vector<ExperimentRun>> experiment_preset(
    const std::string& name, uint64_t seed);

const std::vector<std::string>& experiment_names();

// Open/chmod two-op mix used by the chmod-ratio sweep.
WorkloadSpec chmod_ratio_workload(double chmod_ratio, uint64_t seed);

// Builds the simulation for a run (generating its trace) and executes it.
Metrics execute_run(const ExperimentRun& run);

}  // namespace fletchsim
