#pragma once

#include <functional>
#include <optional>

#include "fletchsim/packet.hpp"
#include "fletchsim/sim_env.hpp"
#include "fletchsim/tokens.hpp"

namespace fletchsim {

// One logical client: closed loop, one outstanding request, learns
// tokens from responses, retransmits on timeout.
class ClientDriver {
  public:
    using NextOpFn = std::function<std::optional<MetaOp>(int client)>;
    using DoneFn = std::function<void(const Packet& response, SimTime latency)>;

    ClientDriver(SimEnv& env, int id, const PathHasher& hasher,
                 NextOpFn next_op, DoneFn on_done);

    void start();
    void on_response(Packet resp);
    bool idle() const { return !pending_; }
    const PathTokenMap& token_map() const { return tokens_; }

    Principal principal;

  private:
    void issue_next();
    Packet build_packet(const MetaOp& op);
    void send_current();
    void arm_timeout();

    SimEnv& env_;
    int id_;
    const PathHasher& hasher_;
    NextOpFn next_op_;
    DoneFn on_done_;

    PathTokenMap tokens_;
    std::optional<Packet> pending_;
    SimTime sent_at_ = 0;
    uint64_t timeout_gen_ = 0;
    uint64_t next_tag_ = 1;
    uint32_t sends_ = 0;
};

}  // namespace fletchsim
