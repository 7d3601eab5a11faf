#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fletchsim/hashing.hpp"

namespace fletchsim {

constexpr uint32_t kLockArrays = 8;
constexpr uint32_t kLockSlots = 65536;

struct LockIndex {
    uint32_t array;  // 1-based
    uint32_t slot;
};

// Level -> (array, slot) mapping. Arrays 1..7 serve levels 1..7; array 8
// serves every deeper level through the level-8 key, so all of a path's
// deep levels share one counter. Single-lock mode collapses the whole
// path onto array 1 through the level-1 key.
inline LockIndex lock_index(size_t level, const std::vector<HashKey>& keys,
                            bool single_lock) {
    if (single_lock) {
        return {1, static_cast<uint32_t>(keys[1] & 0xFFFF)};
    }
    size_t lvl = level < kLockArrays ? level : kLockArrays;
    return {static_cast<uint32_t>(lvl),
            static_cast<uint32_t>(keys[lvl] & 0xFFFF)};
}

// 8 x 65,536 16-bit counters. Underflow and overflow are invariant
// violations reported through the callback and clamped.
class LockCounterArrays {
  public:
    using ViolationFn = std::function<void(const char*)>;

    explicit LockCounterArrays(ViolationFn on_violation = nullptr)
        : counters_(kLockArrays * kLockSlots, 0),
          on_violation_(std::move(on_violation)) {}

    void add(uint32_t array, uint32_t slot, int32_t delta) {
        uint16_t& c = counters_[(array - 1) * kLockSlots + slot];
        int32_t v = static_cast<int32_t>(c) + delta;
        if (v < 0) {
            if (on_violation_) on_violation_("lock_underflow");
            v = 0;
        } else if (v > 0xFFFF) {
            if (on_violation_) on_violation_("lock_overflow");
            v = 0xFFFF;
        }
        c = static_cast<uint16_t>(v);
    }

    uint16_t get(uint32_t array, uint32_t slot) const {
        return counters_[(array - 1) * kLockSlots + slot];
    }

    bool all_zero() const {
        for (uint16_t c : counters_)
            if (c != 0) return false;
        return true;
    }

    uint64_t sum() const {
        uint64_t s = 0;
        for (uint16_t c : counters_) s += c;
        return s;
    }

  private:
    std::vector<uint16_t> counters_;
    ViolationFn on_violation_;
};

}  // namespace fletchsim
