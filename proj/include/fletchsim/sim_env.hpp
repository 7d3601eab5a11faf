#pragma once

#include <functional>
#include <string>

#include "fletchsim/metrics.hpp"
#include "fletchsim/packet.hpp"
#include "fletchsim/rng.hpp"
#include "fletchsim/sim_config.hpp"
#include "fletchsim/sim_time.hpp"

namespace fletchsim {

// What a component sees of the simulation: the clock, the scheduler, the
// network legs (latency and loss live behind these calls), cross-shard
// execution, and the checker hooks.
class SimEnv {
  public:
    virtual ~SimEnv() = default;

    virtual SimTime now() const = 0;
    virtual void after(SimTime delay, std::function<void()> fn) = 0;
    virtual const SimConfig& config() const = 0;
    virtual Metrics& metrics() = 0;

    // Data-plane legs.
    virtual void client_to_switch(Packet pkt) = 0;
    virtual void switch_to_client(int client, Packet pkt) = 0;
    virtual void switch_to_server(int server, Packet pkt) = 0;
    virtual void server_to_switch(Packet pkt) = 0;
    virtual void ack_to_server(int server, uint8_t seq) = 0;

    // Control plane.
    virtual void hot_report(std::string path, HashKey key) = 0;
    virtual void ctrl_to_server(int server, CtrlMsg msg) = 0;
    virtual void ctrl_reply(CtrlMsg msg) = 0;
    virtual void ctrl_to_switch(CtrlMsg msg) = 0;
    virtual void switch_ctrl_reply(CtrlMsg msg) = 0;

    // Namespace execution with placement semantics (files on their
    // owners, directories everywhere); emulates the federation layer.
    virtual OpResult execute_op(const MetaOp& op, const Principal& who,
                                int coordinator) = 0;
    virtual bool write_blocked(const MetaOp& op) const = 0;
    virtual void wake_blocked_writes() = 0;

    // Token held by a path's owner server, for cross-shard cache
    // updates coordinated through the federation layer.
    virtual Token owner_token(const std::string& path) const = 0;

    // Checker state.
    virtual const MetadataRecord* authoritative_record(
        const std::string& path) const = 0;
    virtual uint64_t path_version(const std::string& path) const = 0;
    virtual SimTime version_valid_until(const std::string& path,
                                        uint64_t version) const = 0;
    virtual void violation(const std::string& what) = 0;
    virtual void trace_event(const Packet& pkt, const char* stage) = 0;
};

}  // namespace fletchsim
