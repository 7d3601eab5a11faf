#pragma once

#include <deque>
#include <optional>
#include <set>
#include <unordered_map>

#include "fletchsim/namespace_tree.hpp"
#include "fletchsim/packet.hpp"
#include "fletchsim/sim_env.hpp"
#include "fletchsim/tokens.hpp"

namespace fletchsim {

// One emulated metadata server: a namespace shard (all directories plus
// the files it owns), a path-token map, a FIFO service queue at a fixed
// rate, admission write blocking, and the stop-and-wait sequence
// protocol for lock-related responses.
class MetadataServer {
  public:
    MetadataServer(SimEnv& env, int id, const PathHasher& hasher);

    void on_request(Packet pkt);
    void on_ack(uint8_t seq);
    void on_control(CtrlMsg msg);

    // Re-examines parked writes after any unblock in the system.
    void wake_parked();

    NamespaceTree& shard() { return shard_; }
    const NamespaceTree& shard() const { return shard_; }
    PathTokenMap& token_map() { return tokens_; }
    const PathTokenMap& token_map() const { return tokens_; }
    const std::set<std::string>& blocked_paths() const { return blocked_; }

    uint8_t current_seq() const { return seq_; }
    bool quiescent() const {
        return !unacked_ && lock_queue_.empty() && parked_.empty() &&
               outstanding_jobs_ == 0 && held_writes_.empty();
    }

  private:
    void enqueue_service(std::function<void()> job);
    void execute_request(Packet pkt);
    void finish_request(Packet pkt, const OpResult& result);
    void attach_tokens(Packet& resp);
    void queue_lock_related(Packet resp);
    void pump_lock_queue();
    void arm_retransmit(uint64_t gen);

    SimEnv& env_;
    int id_;
    const PathHasher& hasher_;

    NamespaceTree shard_;
    PathTokenMap tokens_;

    SimTime busy_until_ = 0;
    uint64_t outstanding_jobs_ = 0;

    uint8_t seq_ = 0;
    std::optional<Packet> unacked_;
    uint64_t retransmit_gen_ = 0;
    std::deque<Packet> lock_queue_;

    std::set<std::string> blocked_;
    std::deque<Packet> parked_;
    std::unordered_map<uint64_t, Packet> held_writes_;  // awaiting invalidate ACK

    struct Replay {
        uint64_t tag = 0;
        OpResult result;
    };
    std::unordered_map<int, Replay> replay_;
};

}  // namespace fletchsim
