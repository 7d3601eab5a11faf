#pragma once

#include <cstdint>

namespace fletchsim {

// Simulation clock in integer nanoseconds. Integer time keeps event
// ordering exact and runs reproducible.
using SimTime = uint64_t;

constexpr SimTime kUs = 1000;
constexpr SimTime kMs = 1000 * kUs;
constexpr SimTime kSec = 1000 * kMs;

constexpr SimTime kNever = ~SimTime{0};

inline double to_seconds(SimTime t) { return static_cast<double>(t) / 1e9; }

}  // namespace fletchsim
