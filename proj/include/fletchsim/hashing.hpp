#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "fletchsim/path.hpp"

namespace fletchsim {

using HashKey = uint64_t;

// MD5 digest of an arbitrary byte string (RFC 1321). Used as a fast
// non-cryptographic path digest; collisions are handled by tokens.
std::array<uint8_t, 16> md5(std::string_view data);

enum class HashMode {
    Md5,       // first 64 bits of the MD5 digest of the canonical path
    WeakDepth  // key = depth; forces mass collisions, test-only
};

// Stateless path hasher. The root's key is computed once and reused.
class PathHasher {
  public:
    explicit PathHasher(HashMode mode = HashMode::Md5);

    HashKey hash_level(const Path& p) const;

    // One key per entry of p.levels(), root-down.
    std::vector<HashKey> hash_read_request(const Path& p) const;

    // Single key for the complete path; equals hash_read_request(p).back().
    HashKey hash_write_request(const Path& p) const;

    HashKey root_key() const { return root_key_; }
    HashMode mode() const { return mode_; }

  private:
    HashMode mode_;
    HashKey root_key_;
};

// Row hash for sketch indexing: mixes a 64-bit key with a row salt.
uint32_t sketch_row_slot(HashKey key, uint32_t row, uint32_t width);

}  // namespace fletchsim
