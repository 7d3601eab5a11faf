#pragma once

#include <cstdint>
#include <string>

#include "fletchsim/hashing.hpp"
#include "fletchsim/sim_time.hpp"

namespace fletchsim {

enum class Scheme { NoCache, Fletch };
enum class LockMode { Multi, Single };

struct SimConfig {
    int n_servers = 16;
    int n_clients = 128;
    double service_rate = 50000;  // ops/s per server, deterministic service

    // One-way latencies per leg.
    SimTime lat_client_switch = 10 * kUs;
    SimTime lat_switch_server = 15 * kUs;
    SimTime lat_ctrl_server = 50 * kUs;
    SimTime lat_ctrl_switch = 20 * kUs;
    SimTime switch_traversal = 1 * kUs;  // per pipeline pass, pure delay

    // Loss applies where the protocol defines recovery: lock-related
    // server responses and switch ACKs. Other legs are lossless.
    double loss_server_response = 0.0;
    double loss_ack = 0.0;
    double loss_control = 0.0;

    Scheme scheme = Scheme::Fletch;
    LockMode lock_mode = LockMode::Multi;
    HashMode hash_mode = HashMode::Md5;

    uint32_t cache_capacity = 8192;
    uint32_t cms_threshold = 10;
    SimTime freq_pull_period = 2 * kSec;
    uint32_t preload_files = 5000;

    SimTime client_token_ttl = 3600 * kSec;
    SimTime ctrl_fetch_timeout = 10 * kMs;
    int ctrl_fetch_retries = 5;
    uint32_t starvation_recirc_threshold = 10000;

    SimTime duration = 0;  // 0: run to trace completion
    uint64_t seed = 1;

    // Continuous checkers. fidelity = one register array access per
    // traversal; soundness = cache reads match some server state within
    // the request lifetime.
    bool check_fidelity = true;
    bool check_soundness = true;
    bool collect_latencies = true;
    bool per_second_series = false;
    bool dump_events = false;
};

}  // namespace fletchsim
