#pragma once

#include <set>
#include <string>
#include <vector>

#include "fletchsim/cms.hpp"
#include "fletchsim/consistent_hash.hpp"
#include "fletchsim/lock_arrays.hpp"
#include "fletchsim/packet.hpp"
#include "fletchsim/sim_env.hpp"
#include "fletchsim/tokens.hpp"

namespace fletchsim {

// The simulated data plane: hash-token match table, value registers,
// validation flags, lock counters, CMS, frequency counters and the
// per-server sequence counters. One pipeline traversal per event;
// recirculation schedules the next traversal after the pass delay.
class SwitchDataplane {
  public:
    SwitchDataplane(SimEnv& env, const PathHasher& hasher,
                    const ConsistentHashRing& ring);

    // Request arriving from a client (pre cross-pipe redirect).
    void on_client_packet(Packet pkt);

    // Response or cache update arriving from a server.
    void on_server_packet(Packet pkt);

    // Controller operations, applied atomically at delivery.
    void apply_control(const CtrlMsg& msg);

    // Installs the permanently cached root record.
    void set_root_record(const MetadataRecord& rec) { root_record_ = rec; }

    // State inspection for audits and tests.
    bool locks_all_zero() const { return locks_.all_zero(); }
    uint64_t lock_sum() const { return locks_.sum(); }
    uint16_t lock_value(uint32_t array, uint32_t slot) const {
        return locks_.get(array, slot);
    }
    const HashTokenMap& mat() const { return mat_; }
    uint32_t cms_estimate(HashKey k) const { return cms_.estimate(k); }
    uint8_t expected_seq(int server) const { return seq_expected_[server]; }

    struct SlotView {
        bool in_use = false;
        bool valid = false;
        std::string path;
        MetadataRecord record;
        uint32_t frequency = 0;
    };
    SlotView slot_view(uint32_t slot) const;
    uint32_t capacity() const { return capacity_; }

  private:
    struct Fidelity {
        std::vector<std::pair<uint32_t, uint32_t>> touches;  // (array id, slot)
        void clear() { touches.clear(); }
    };

    void ingress_entry(Packet pkt);
    void read_arrival(Packet pkt);
    void resolve_traversal(Packet pkt);
    void write_arrival(Packet pkt);
    void write_lock_pass(Packet pkt);
    void forward_to_owner(Packet pkt);
    void respond_error(Packet pkt, Status s);
    void finish_read(Packet pkt, const MetadataRecord& rec);

    void touch(uint32_t array_id, uint32_t slot);
    void end_traversal();

    // Applies one lock delta per (array, slot) for levels [from..to].
    void lock_delta(const Packet& pkt, size_t from, size_t to, int sign);
    void cms_update_and_check(const Packet& pkt);

    LockIndex write_lock(const Packet& pkt) const;

    SimEnv& env_;
    const PathHasher& hasher_;
    const ConsistentHashRing& ring_;

    uint32_t capacity_;
    HashTokenMap mat_;
    std::vector<MetadataRecord> values_;
    std::vector<uint8_t> valid_;
    std::vector<uint32_t> freq_;
    std::vector<std::string> slot_path_;     // checker/controller bookkeeping
    std::vector<uint64_t> slot_version_;     // checker shadow
    std::vector<uint8_t> slot_used_;
    // Writes in flight per slot: the validation flag only returns to one
    // when the last overlapping write settles.
    std::vector<uint16_t> write_pending_;
    LockCounterArrays locks_;
    CountMinSketch cms_;
    std::vector<uint8_t> seq_expected_;
    std::set<std::string> pending_reports_;
    MetadataRecord root_record_;

    Fidelity fidelity_;
    bool single_lock_;
    SimTime traversal_ns_;
};

}  // namespace fletchsim
