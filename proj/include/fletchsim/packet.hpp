#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fletchsim/hashing.hpp"
#include "fletchsim/metadata.hpp"
#include "fletchsim/namespace_tree.hpp"
#include "fletchsim/sim_time.hpp"
#include "fletchsim/tokens.hpp"

namespace fletchsim {

enum class MsgKind : uint8_t {
    Request,      // client -> switch -> server
    Response,     // server -> switch -> client, or switch-served
    CacheUpdate,  // server -> switch (multi-path write propagation)
};

struct PathTokenPair {
    std::string path;
    Token token = kInvalidToken;
};

// One in-flight message. A single struct plays request, response and
// cache-update roles; the switch keeps its resolution state (cursor,
// held lock range, recirculation counters) inside the packet across
// pipeline traversals.
struct Packet {
    MsgKind msg = MsgKind::Request;
    uint64_t id = 0;
    uint64_t request_tag = 0;  // stable across client retransmissions
    int client = -1;
    MetaOp op;
    Principal requester;

    // Hash material. Reads carry one key per level root-down; writes
    // carry the full-path key alone plus the lock key the switch will
    // consult (the level-8 prefix key for paths deeper than 8, or the
    // level-1 key in single-lock mode).
    std::vector<HashKey> level_keys;
    std::vector<Token> level_tokens;
    HashKey write_lock_key = 0;

    // Switch-side resolution state.
    size_t cursor = 0;                  // level being resolved, 1-based
    int held_from = 1, held_to = 0;     // lock increments currently held (empty if from > to)
    uint32_t recirc_path = 0;           // path-resolution recirculations
    uint32_t recirc_lock = 0;           // lock-access/lock-wait recirculations
    uint32_t recirc_cross = 0;          // cross-pipeline redirects
    uint32_t lock_sample_gap = 1;       // traversals covered per lock sample
    bool redirected = false;
    bool starvation_flagged = false;
    bool switch_hit = false;

    // Server <-> switch reliability protocol.
    int origin_server = -1;
    bool lock_related = false;
    uint8_t seq = 0;
    bool needs_value_update = false;
    bool mark_deleted = false;

    // Cache-update payload (multi-path writes).
    HashKey update_key = 0;
    Token update_token = kInvalidToken;
    std::string update_path;
    MetadataRecord update_record;
    bool carries_client_response = false;

    // Writes that reached the server without a switch-side invalidation
    // (cached after transit, or parked behind an admission) must drop
    // the validation flag before mutating; this marks that message.
    bool invalidate_only = false;
    uint64_t invalidate_for_tag = 0;
    bool was_parked = false;
    bool preinvalidated = false;

    // Response payload.
    Status status = Status::Ok;
    std::optional<MetadataRecord> record;
    std::vector<DirEntry> listing;
    std::vector<PathTokenPair> tokens_granted;

    // Shadow fields for the consistency checkers; not part of the
    // modeled wire format.
    std::string record_path;
    uint64_t record_version = 0;
    std::vector<std::pair<std::string, uint16_t>> resolved_modes;

    SimTime issued_at = 0;
};

// Control-plane message between controller, servers and switch.
struct CtrlMsg {
    enum class Kind {
        FetchAndBlock,  // ctrl -> server: block writes, return records
        FetchReply,     // server -> ctrl
        Unblock,        // ctrl -> server
        TokenInstall,   // ctrl -> server
        TokenRemove,    // ctrl -> server
        Admit,             // ctrl -> switch
        Evict,             // ctrl -> switch
        PullFreq,          // ctrl -> switch
        PullFreqAndReset,  // ctrl -> switch: reply, then zero CMS + counters
        FreqReply,         // switch -> ctrl
        ResetSketch,       // ctrl -> switch
    };

    struct AdmitEntry {
        std::string path;
        HashKey key = 0;
        Token token = kInvalidToken;
        uint32_t slot = 0;
        MetadataRecord record;
    };

    Kind kind = Kind::FetchAndBlock;
    uint64_t xid = 0;
    int server = -1;
    std::vector<std::string> paths;
    std::vector<Token> tokens;
    std::vector<AdmitEntry> entries;
    std::vector<std::pair<HashKey, Token>> kt;
    std::vector<Status> statuses;
    std::vector<MetadataRecord> records;
    std::vector<uint32_t> counts;
};

}  // namespace fletchsim
