#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "fletchsim/hashing.hpp"

namespace fletchsim {

// Consistent-hash ring mapping full file paths onto servers. Directories
// are replicated on every server; only file placement consults the ring.
class ConsistentHashRing {
  public:
    explicit ConsistentHashRing(int n_servers, int vnodes_per_server = 160) {
        for (int s = 0; s < n_servers; ++s) {
            for (int v = 0; v < vnodes_per_server; ++v) {
                std::string label =
                    "server-" + std::to_string(s) + "#" + std::to_string(v);
                auto digest = md5(label);
                uint64_t point = 0;
                for (int i = 0; i < 8; ++i) point = (point << 8) | digest[i];
                ring_.emplace(point, s);
            }
        }
    }

    int owner_of_key(HashKey k) const {
        auto it = ring_.lower_bound(k);
        if (it == ring_.end()) it = ring_.begin();
        return it->second;
    }

    int owner_of_path(std::string_view canonical_path) const {
        auto digest = md5(canonical_path);
        uint64_t point = 0;
        for (int i = 0; i < 8; ++i) point = (point << 8) | digest[i];
        return owner_of_key(point);
    }

  private:
    std::map<uint64_t, int> ring_;
};

}  // namespace fletchsim
