#include <map>

#include "doctest.h"
#include "fletchsim/cms.hpp"
#include "fletchsim/consistent_hash.hpp"
#include "fletchsim/rng.hpp"

using namespace fletchsim;

TEST_CASE("cms never under-counts") {
    CountMinSketch cms(3, 4096);  // narrow rows force collisions
    std::map<HashKey, uint32_t> exact;
    Rng rng(2024);
    for (int i = 0; i < 200000; ++i) {
        HashKey k = rng.next_below(20000);
        cms.update(k);
        exact[k] += 1;
    }
    for (const auto& [k, n] : exact) {
        CHECK(cms.estimate(k) >= n);
    }
}

TEST_CASE("cms reset zeroes every estimate") {
    CountMinSketch cms;
    for (HashKey k = 0; k < 100; ++k) cms.update(k);
    cms.reset();
    for (HashKey k = 0; k < 100; ++k) CHECK(cms.estimate(k) == 0);
}

TEST_CASE("cms counters saturate") {
    CountMinSketch cms(3, 8);
    for (int i = 0; i < 70000; ++i) cms.update(1);
    CHECK(cms.estimate(1) == 65535);
}

TEST_CASE("consistent hashing is deterministic and near uniform") {
    ConsistentHashRing ring(16);
    Rng rng(7);
    std::vector<uint64_t> counts(16, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        std::string path = "/d" + std::to_string(rng.next_below(40)) + "/f" +
                           std::to_string(i) + ".dat";
        int a = ring.owner_of_path(path);
        int b = ring.owner_of_path(path);
        CHECK(a == b);
        counts[a] += 1;
    }
    double expect = n / 16.0;
    for (int s = 0; s < 16; ++s) {
        CHECK(counts[s] > expect * 0.8);
        CHECK(counts[s] < expect * 1.2);
    }

    ConsistentHashRing one(1);
    CHECK(one.owner_of_path("/anything") == 0);
}
