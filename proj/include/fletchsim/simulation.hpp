#pragma once

#include <deque>
#include <memory>
#include <unordered_map>

#include "fletchsim/client_driver.hpp"
#include "fletchsim/consistent_hash.hpp"
#include "fletchsim/controller.hpp"
#include "fletchsim/event_queue.hpp"
#include "fletchsim/metadata_server.hpp"
#include "fletchsim/sim_env.hpp"
#include "fletchsim/switch_dataplane.hpp"
#include "fletchsim/workload.hpp"

namespace fletchsim {

// Wires clients, switch, controller and servers over a latency/loss
// network, owns the event loop, and implements the cross-shard
// federation semantics and the consistency checkers.
class Simulation : public SimEnv {
  public:
    Simulation(const SimConfig& cfg, const WorkloadSpec& spec);
    Simulation(const SimConfig& cfg, const WorkloadSpec& spec,
               BuiltNamespace ns);

    // Exactly one source must be set before run().
    void load_trace(const Trace& trace);
    void use_dynamic_workload(uint64_t max_ops);

    // Synchronously admits the given paths (root-down order, ancestors
    // first); records come from the master tree. Scenario-test hook.
    void preload_exact(const std::vector<std::string>& paths);

    Metrics run();

    // Post-run audits; they add to metrics().violations on failure.
    bool audit_write_through();
    bool audit_lock_balance();
    bool audit_mirror();
    bool audit_conservation();
    bool quiescent() const;

    SwitchDataplane& dataplane() { return *switch_; }
    Controller& controller() { return *controller_; }
    MetadataServer& server(int i) { return *servers_[i]; }
    ClientDriver& client(int i) { return *clients_[i]; }
    const BuiltNamespace& built() const { return ns_; }
    WorkloadSampler& sampler() { return *sampler_; }
    const PathHasher& hasher() const { return hasher_; }
    const ConsistentHashRing& ring() const { return ring_; }
    EventQueue& queue() { return queue_; }

    // Invoked on every client-visible response, after metric updates.
    std::function<void(const Packet&, SimTime)> response_hook;

    // SimEnv interface.
    SimTime now() const override { return queue_.now(); }
    void after(SimTime delay, std::function<void()> fn) override {
        queue_.after(delay, std::move(fn));
    }
    const SimConfig& config() const override { return cfg_; }
    Metrics& metrics() override { return metrics_; }
    void client_to_switch(Packet pkt) override;
    void switch_to_client(int client, Packet pkt) override;
    void switch_to_server(int server, Packet pkt) override;
    void server_to_switch(Packet pkt) override;
    void ack_to_server(int server, uint8_t seq) override;
    void hot_report(std::string path, HashKey key) override;
    void ctrl_to_server(int server, CtrlMsg msg) override;
    void ctrl_reply(CtrlMsg msg) override;
    void ctrl_to_switch(CtrlMsg msg) override;
    void switch_ctrl_reply(CtrlMsg msg) override;
    OpResult execute_op(const MetaOp& op, const Principal& who,
                        int coordinator) override;
    bool write_blocked(const MetaOp& op) const override;
    void wake_blocked_writes() override;
    Token owner_token(const std::string& path) const override;
    const MetadataRecord* authoritative_record(
        const std::string& path) const override;
    uint64_t path_version(const std::string& path) const override;
    SimTime version_valid_until(const std::string& path,
                                uint64_t version) const override;
    void violation(const std::string& what) override;
    void trace_event(const Packet& pkt, const char* stage) override;

    void set_event_sink(std::ostream* sink) { event_sink_ = sink; }

  private:
    void preload_cache();
    void schedule_freq_pull();
    bool clients_active() const;
    void on_client_done(const Packet& resp, SimTime latency);
    std::optional<MetaOp> next_op(int client);
    void bump_version(const std::string& path);
    uint32_t now_sec() const {
        return static_cast<uint32_t>(now() / kSec);
    }

    SimConfig cfg_;
    WorkloadSpec spec_;
    PathHasher hasher_;
    ConsistentHashRing ring_;
    BuiltNamespace ns_;
    EventQueue queue_;
    Metrics metrics_;
    Rng net_rng_;
    Rng workload_rng_;

    std::unique_ptr<SwitchDataplane> switch_;
    std::unique_ptr<Controller> controller_;
    std::vector<std::unique_ptr<MetadataServer>> servers_;
    std::vector<std::unique_ptr<ClientDriver>> clients_;
    std::unique_ptr<WorkloadSampler> sampler_;

    // Trace delivery.
    std::vector<std::deque<MetaOp>> per_client_ops_;
    bool dynamic_mode_ = false;
    uint64_t dynamic_remaining_ = 0;
    SimTime next_shift_ = 0;

    struct PathHist {
        uint64_t version = 0;
        std::vector<SimTime> mutation_times = {0};
    };
    std::unordered_map<std::string, PathHist> history_;

    std::vector<uint64_t> second_buckets_;
    std::ostream* event_sink_ = nullptr;
    uint64_t next_packet_id_ = 1;
};

}  // namespace fletchsim
