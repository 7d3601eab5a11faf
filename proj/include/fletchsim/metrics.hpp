#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "fletchsim/sim_time.hpp"

namespace fletchsim {

struct LatencyStats {
    double mean = 0, p95 = 0, p99 = 0;
    uint64_t count = 0;
};

// Computes nearest-rank percentiles; mutates (sorts) the sample vector.
LatencyStats summarize_latencies(std::vector<SimTime>& samples);

struct Metrics {
    // Conservation.
    uint64_t issued = 0;
    uint64_t completed = 0;
    uint64_t retransmissions = 0;

    // Per-class completion and latency samples (ns).
    uint64_t reads_completed = 0;
    uint64_t writes_completed = 0;
    uint64_t errors_returned = 0;
    std::vector<SimTime> read_latencies;
    std::vector<SimTime> write_latencies;
    bool collect_latencies = true;

    // Cache behavior.
    uint64_t single_path_reads = 0;
    uint64_t mat_hits = 0;
    uint64_t served_from_switch = 0;

    // Recirculation accounting (cross-pipe reported separately).
    uint64_t recirc_path = 0;
    uint64_t recirc_lock = 0;
    uint64_t recirc_cross = 0;
    uint64_t starvation_warnings = 0;

    // Control plane.
    uint64_t hot_reports = 0;
    uint64_t admissions = 0;
    uint64_t admitted_paths = 0;
    uint64_t evicted_paths = 0;
    uint64_t admissions_aborted = 0;
    uint64_t sketch_resets = 0;

    // Reliability protocol.
    uint64_t dup_responses_suppressed = 0;
    uint64_t server_retransmissions = 0;
    uint64_t responses_dropped = 0;
    uint64_t acks_dropped = 0;

    // Server load.
    std::vector<uint64_t> per_server_ops;

    // Invariant violations; any nonzero fails the run.
    std::map<std::string, uint64_t> violations;

    // Per-second completed ops (optional).
    std::vector<uint64_t> per_second_completed;

    SimTime first_issue = kNever;
    SimTime last_completion = 0;

    uint64_t total_violations() const {
        uint64_t n = 0;
        for (const auto& [k, v] : violations) n += v;
        return n;
    }

    double duration_seconds() const {
        if (first_issue == kNever || last_completion <= first_issue) return 0;
        return to_seconds(last_completion - first_issue);
    }

    double throughput() const {
        double d = duration_seconds();
        return d > 0 ? static_cast<double>(completed) / d : 0;
    }

    double mean_recirculations() const {
        if (completed == 0) return 0;
        return static_cast<double>(recirc_path + recirc_lock) /
               static_cast<double>(completed);
    }

    double hit_rate() const {
        if (single_path_reads == 0) return 0;
        return static_cast<double>(served_from_switch) /
               static_cast<double>(single_path_reads);
    }

    void write_csv(std::ostream& out, const std::string& run_label);
    static void write_csv_header(std::ostream& out);
};

}  // namespace fletchsim
