#pragma once

#include <cstdint>
#include <vector>

#include "fletchsim/hashing.hpp"

namespace fletchsim {

// Count-Min Sketch over 64-bit keys: independent row hashes, saturating
// 16-bit counters. estimate(x) never under-counts since the last reset.
class CountMinSketch {
  public:
    CountMinSketch(uint32_t rows = 3, uint32_t width = 65536)
        : rows_(rows), width_(width), counters_(rows * width, 0) {}

    // Increments every row and returns the post-update estimate.
    uint32_t update(HashKey key) {
        uint32_t est = UINT32_MAX;
        for (uint32_t r = 0; r < rows_; ++r) {
            uint16_t& c = counters_[r * width_ + sketch_row_slot(key, r, width_)];
            if (c < UINT16_MAX) ++c;
            est = c < est ? c : est;
        }
        return est;
    }

    uint32_t estimate(HashKey key) const {
        uint32_t est = UINT32_MAX;
        for (uint32_t r = 0; r < rows_; ++r) {
            uint16_t c = counters_[r * width_ + sketch_row_slot(key, r, width_)];
            est = c < est ? c : est;
        }
        return est;
    }

    void reset() { std::fill(counters_.begin(), counters_.end(), 0); }

    uint32_t rows() const { return rows_; }
    uint32_t width() const { return width_; }

  private:
    uint32_t rows_;
    uint32_t width_;
    std::vector<uint16_t> counters_;
};

}  // namespace fletchsim
