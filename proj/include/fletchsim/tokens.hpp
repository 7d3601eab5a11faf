#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>

#include "fletchsim/hashing.hpp"
#include "fletchsim/path.hpp"
#include "fletchsim/sim_time.hpp"

namespace fletchsim {

// 8-bit disambiguator paired with a hash key. 0 is invalid; 1..255 are
// valid, so up to 255 paths may share one hash key.
using Token = uint8_t;
constexpr Token kInvalidToken = 0;

// path -> (token, expiry). Clients pass a TTL so stale entries age out;
// servers and the controller keep entries until told otherwise.
class PathTokenMap {
  public:
    // Returns the stored unexpired token, else 0. Expired entries are
    // removed on the way.
    Token lookup(const std::string& path, SimTime now) {
        auto it = entries_.find(path);
        if (it == entries_.end()) return kInvalidToken;
        if (it->second.expiry <= now) {
            entries_.erase(it);
            return kInvalidToken;
        }
        return it->second.token;
    }

    void put(const std::string& path, Token t, SimTime expiry = kNever,
             SimTime installed_at = 0) {
        if (t == kInvalidToken) return;
        entries_[path] = {t, expiry, installed_at};
    }

    // When the entry was (re)installed; 0 when absent or preloaded.
    SimTime installed_at(const std::string& path) const {
        auto it = entries_.find(path);
        return it == entries_.end() ? 0 : it->second.installed_at;
    }

    void erase(const std::string& path) { entries_.erase(path); }
    size_t size() const { return entries_.size(); }

  private:
    struct Entry {
        Token token;
        SimTime expiry;
        SimTime installed_at;
    };
    std::unordered_map<std::string, Entry> entries_;
};

// (hash key, token) -> cache slot. Held by the switch; the controller
// mirrors it to track the global cached set.
class HashTokenMap {
  public:
    std::optional<uint32_t> lookup(HashKey k, Token t) const {
        if (t == kInvalidToken) return std::nullopt;
        auto it = entries_.find(compose(k, t));
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    bool contains(HashKey k, Token t) const { return lookup(k, t).has_value(); }

    void put(HashKey k, Token t, uint32_t slot) {
        entries_[compose(k, t)] = slot;
    }

    void erase(HashKey k, Token t) { entries_.erase(compose(k, t)); }
    size_t size() const { return entries_.size(); }

  private:
    // Distinct tokens per key make (k, t) unique, so a mixed key is safe.
    static uint64_t compose(HashKey k, Token t) {
        return (k * 0x100000001b3ULL) ^ t;
    }
    std::unordered_map<uint64_t, uint32_t> entries_;
};

// Controller-side token bookkeeping. Entries persist across evictions:
// a re-admitted path gets its previous token back, and the next-free
// counter per key never rewinds.
class TokenAllocator {
  public:
    // Token for path p with hash key k; 1 for the first path at a key,
    // the next unused value for colliders. nullopt once 255 paths share
    // the key.
    std::optional<Token> allocate(const std::string& path, HashKey k) {
        auto it = assigned_.find(path);
        if (it != assigned_.end()) return it->second;
        uint32_t next = next_free_.count(k) ? next_free_[k] : 1;
        if (next > 255) return std::nullopt;
        next_free_[k] = next + 1;
        Token t = static_cast<Token>(next);
        assigned_[path] = t;
        return t;
    }

    std::optional<Token> lookup(const std::string& path) const {
        auto it = assigned_.find(path);
        if (it == assigned_.end()) return std::nullopt;
        return it->second;
    }

    uint32_t next_free(HashKey k) const {
        auto it = next_free_.find(k);
        return it == next_free_.end() ? 1 : it->second;
    }

  private:
    std::unordered_map<std::string, Token> assigned_;
    std::unordered_map<HashKey, uint32_t> next_free_;
};

}  // namespace fletchsim
