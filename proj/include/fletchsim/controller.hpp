#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fletchsim/consistent_hash.hpp"
#include "fletchsim/packet.hpp"
#include "fletchsim/sim_env.hpp"
#include "fletchsim/tokens.hpp"

namespace fletchsim {

// Path-aware cache orchestration: keeps the global cached set closed
// under ancestry, allocates tokens, drives admission (fetch + block,
// evict, install, distribute, unblock) one hot path at a time.
class Controller {
  public:
    Controller(SimEnv& env, const PathHasher& hasher,
               const ConsistentHashRing& ring);

    void on_hot_report(const std::string& path, HashKey key);
    void on_fetch_reply(const CtrlMsg& msg);
    void on_freq_reply(const CtrlMsg& msg);

    // Periodic frequency snapshot + sketch reset; driven by the harness.
    void periodic_pull();

    // Synchronous pre-run admission; returns the switch install list and
    // per-server token distribution through the two callbacks.
    void preload(const std::vector<std::pair<std::string, MetadataRecord>>&
                     paths_root_down,
                 const std::function<void(const CtrlMsg&)>& to_switch,
                 const std::function<void(int, const CtrlMsg&)>& to_server);

    bool is_cached(const std::string& path) const {
        return cached_.count(path) != 0;
    }
    size_t cached_count() const { return cached_.size(); }
    std::vector<std::string> cached_paths() const;
    std::optional<std::pair<HashKey, Token>> cached_entry(
        const std::string& path) const;
    std::optional<uint32_t> slot_of(const std::string& path) const;
    bool admission_idle() const {
        return !admission_ && report_queue_.empty();
    }
    const std::vector<std::string>& decision_log() const { return log_; }
    uint64_t reported_frequency(const std::string& path) const;

    // Test hooks: invoked after every completed controller action, and
    // a direct override of the reported-frequency table.
    std::function<void()> post_action_hook;
    void set_reported_frequency(const std::string& path, uint64_t freq);

    // Eviction selection, exposed for scenario tests. Returns up to
    // 2*need candidates under the reported frequencies.
    std::vector<std::string> select_eviction_candidates(size_t need) const;

  private:
    struct CachedEntry {
        HashKey key = 0;
        Token token = kInvalidToken;
        uint32_t slot = 0;
        uint64_t reported_freq = 0;
        int cached_children = 0;
    };

    struct Admission {
        std::string hot_path;
        std::vector<std::string> to_admit;  // root-down, uncached levels
        std::map<std::string, MetadataRecord> fetched;
        std::set<int> contacted;
        std::set<int> awaiting;
        uint64_t xid = 0;
        int retries_left = 0;
        bool fetch_failed = false;
        std::vector<std::string> candidates;
        size_t evicted_so_far = 0;
    };

    void try_start();
    void begin_fetch(Admission& adm);
    void arm_fetch_timer(uint64_t xid);
    void proceed_after_fetch();
    void request_live_frequencies();
    void evict_with_live(const std::map<std::string, uint64_t>& live);
    void install_and_distribute();
    void abort_admission(const std::string& reason);
    void finish_admission();

    bool evictable(const std::string& path,
                   const std::set<std::string>& chosen) const;
    void evict_one(const std::string& leaf, std::vector<std::string>& order);
    int route_owner(const std::string& path) const;
    bool is_dir(const std::string& path) const;
    void distribute_tokens(const std::vector<std::string>& paths,
                           const std::vector<Token>& tokens);
    void remove_tokens(const std::vector<std::string>& paths);
    void log_action(const std::string& line);

    SimEnv& env_;
    const PathHasher& hasher_;
    const ConsistentHashRing& ring_;
    uint32_t capacity_;

    std::map<std::string, CachedEntry> cached_;
    std::map<std::string, NodeKind> kind_hint_;  // from fetched records
    TokenAllocator tokens_;
    std::set<uint32_t> free_slots_;

    std::deque<std::string> report_queue_;
    std::set<std::string> queued_;
    std::optional<Admission> admission_;
    uint64_t next_xid_ = 1;
    uint64_t periodic_xid_ = 0;

    std::vector<std::string> log_;
};

}  // namespace fletchsim
