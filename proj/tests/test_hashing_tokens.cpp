#include <map>

#include "doctest.h"
#include "fletchsim/hashing.hpp"
#include "fletchsim/tokens.hpp"

using namespace fletchsim;

namespace {

std::string hex(const std::array<uint8_t, 16>& d) {
    static const char* t = "0123456789abcdef";
    std::string s;
    for (uint8_t b : d) {
        s += t[b >> 4];
        s += t[b & 15];
    }
    return s;
}

}  // namespace

TEST_CASE("md5 reference vectors") {
    CHECK(hex(md5("")) == "d41d8cd98f00b204e9800998ecf8427e");
    CHECK(hex(md5("a")) == "0cc175b9c0f1b6a831c399e269772661");
    CHECK(hex(md5("abc")) == "900150983cd24fb0d6963f7d28e17f72");
    CHECK(hex(md5("message digest")) == "f96b697d7cb7938d525a2f31aaf161d0");
    CHECK(hex(md5("abcdefghijklmnopqrstuvwxyz")) ==
          "c3fcd3d76192e4007dfb496cca67e13b");
    CHECK(hex(md5("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz01234"
                  "56789")) == "d174ab98d277d9f5a5611c2c9f419d9f");
    CHECK(hex(md5("1234567890123456789012345678901234567890123456789012345678"
                  "9012345678901234567890")) ==
          "57edf4a22be3c955ac49da2e2107b67a");
}

TEST_CASE("md5 block boundaries") {
    // Padding straddles the 55/56/64-byte edges.
    for (size_t n : {55u, 56u, 63u, 64u, 65u, 119u, 120u, 128u}) {
        std::string s(n, 'x');
        auto d1 = md5(s);
        auto d2 = md5(s);
        CHECK(d1 == d2);
    }
    CHECK(hex(md5(std::string(64, 'y'))) != hex(md5(std::string(65, 'y'))));
}

TEST_CASE("path hashing") {
    PathHasher h(HashMode::Md5);
    // First 64 bits of the digest, big-endian.
    auto digest = md5("/");
    HashKey expect = 0;
    for (int i = 0; i < 8; ++i) expect = (expect << 8) | digest[i];
    CHECK(h.root_key() == expect);
    CHECK(h.hash_level(Path::require("/")) == h.root_key());

    CHECK(h.hash_level(Path::require("/a")) !=
          h.hash_level(Path::require("/b")));

    auto keys = h.hash_read_request(Path::require("/a/b/c.txt"));
    REQUIRE(keys.size() == 4);
    CHECK(keys[0] == h.root_key());
    CHECK(keys[1] == h.hash_level(Path::require("/a")));
    CHECK(keys[3] == h.hash_write_request(Path::require("/a/b/c.txt")));

    CHECK(h.hash_read_request(Path::require("/")).size() == 1);
    std::vector<std::string> parts;
    for (int i = 0; i < 9; ++i) parts.push_back("p" + std::to_string(i));
    CHECK(h.hash_read_request(Path(parts)).size() == 10);
}

TEST_CASE("weak hash mode collides by depth") {
    PathHasher h(HashMode::WeakDepth);
    CHECK(h.hash_level(Path::require("/a")) ==
          h.hash_level(Path::require("/b")));
    CHECK(h.hash_level(Path::require("/a")) !=
          h.hash_level(Path::require("/a/b")));
    CHECK(h.hash_write_request(Path::require("/x/y")) == 2);
    CHECK(h.root_key() == 0);
}

TEST_CASE("token allocation") {
    TokenAllocator alloc;
    HashKey k = 42;
    CHECK(*alloc.allocate("/a", k) == 1);
    CHECK(*alloc.allocate("/b", k) == 2);   // collider gets the next value
    CHECK(*alloc.allocate("/a", k) == 1);   // reuse after (conceptual) evict
    CHECK(*alloc.allocate("/c", 43) == 1);  // fresh key restarts at 1
    CHECK(alloc.next_free(k) == 3);

    // Exhaustion at the 256th collider.
    TokenAllocator full;
    for (int i = 1; i <= 255; ++i) {
        auto t = full.allocate("/p" + std::to_string(i), 7);
        REQUIRE(t.has_value());
        CHECK(*t == i);
    }
    CHECK(!full.allocate("/p256", 7).has_value());
}

TEST_CASE("token allocation stays unique per key under weak hashing") {
    PathHasher h(HashMode::WeakDepth);
    TokenAllocator alloc;
    std::map<std::pair<HashKey, Token>, std::string> seen;
    for (int i = 0; i < 200; ++i) {
        Path p = Path::require("/f" + std::to_string(i));
        HashKey k = h.hash_level(p);
        auto t = alloc.allocate(p.str(), k);
        REQUIRE(t.has_value());
        auto [it, fresh] = seen.emplace(std::make_pair(k, *t), p.str());
        CHECK(fresh);  // (key, token) uniquely identifies the path
    }
}

TEST_CASE("client token map expiry") {
    PathTokenMap m;
    CHECK(m.lookup("/a", 100) == kInvalidToken);
    m.put("/a", 3, 200);
    CHECK(m.lookup("/a", 150) == 3);
    CHECK(m.lookup("/a", 200) == kInvalidToken);  // purged on the way
    CHECK(m.size() == 0);

    m.put("/b", 9);  // server-style entry, never expires
    CHECK(m.lookup("/b", kNever - 1) == 9);
}

TEST_CASE("hash-token map lookups") {
    HashTokenMap m;
    m.put(11, 1, 5);
    CHECK(m.lookup(11, 1) == 5u);
    CHECK(!m.lookup(11, 0).has_value());  // token zero always misses
    CHECK(!m.lookup(11, 2).has_value());
    CHECK(!m.lookup(12, 1).has_value());
    m.erase(11, 1);
    CHECK(!m.lookup(11, 1).has_value());
}
