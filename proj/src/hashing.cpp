#include "fletchsim/hashing.hpp"

#include <cstring>

namespace fletchsim {

namespace {

constexpr uint32_t kShift[64] = {
    7, 12, 17, 22, 7, 12, 17, 22, 7, 12, 17, 22, 7, 12, 17, 22,
    5, 9,  14, 20, 5, 9,  14, 20, 5, 9,  14, 20, 5, 9,  14, 20,
    4, 11, 16, 23, 4, 11, 16, 23, 4, 11, 16, 23, 4, 11, 16, 23,
    6, 10, 15, 21, 6, 10, 15, 21, 6, 10, 15, 21, 6, 10, 15, 21};

constexpr uint32_t kSine[64] = {
    0xd76aa478, 0xe8c7b756, 0x242070db, 0xc1bdceee, 0xf57c0faf, 0x4787c62a,
    0xa8304613, 0xfd469501, 0x698098d8, 0x8b44f7af, 0xffff5bb1, 0x895cd7be,
    0x6b901122, 0xfd987193, 0xa679438e, 0x49b40821, 0xf61e2562, 0xc040b340,
    0x265e5a51, 0xe9b6c7aa, 0xd62f105d, 0x02441453, 0xd8a1e681, 0xe7d3fbc8,
    0x21e1cde6, 0xc33707d6, 0xf4d50d87, 0x455a14ed, 0xa9e3e905, 0xfcefa3f8,
    0x676f02d9, 0x8d2a4c8a, 0xfffa3942, 0x8771f681, 0x6d9d6122, 0xfde5380c,
    0xa4beea44, 0x4bdecfa9, 0xf6bb4b60, 0xbebfbc70, 0x289b7ec6, 0xeaa127fa,
    0xd4ef3085, 0x04881d05, 0xd9d4d039, 0xe6db99e5, 0x1fa27cf8, 0xc4ac5665,
    0xf4292244, 0x432aff97, 0xab9423a7, 0xfc93a039, 0x655b59c3, 0x8f0ccc92,
    0xffeff47d, 0x85845dd1, 0x6fa87e4f, 0xfe2ce6e0, 0xa3014314, 0x4e0811a1,
    0xf7537e82, 0xbd3af235, 0x2ad7d2bb, 0xeb86d391};

uint32_t rotl(uint32_t x, uint32_t c) { return (x << c) | (x >> (32 - c)); }

void md5_block(uint32_t state[4], const uint8_t* block) {
    uint32_t m[16];
    for (int i = 0; i < 16; ++i) {
        m[i] = static_cast<uint32_t>(block[i * 4]) |
               (static_cast<uint32_t>(block[i * 4 + 1]) << 8) |
               (static_cast<uint32_t>(block[i * 4 + 2]) << 16) |
               (static_cast<uint32_t>(block[i * 4 + 3]) << 24);
    }
    uint32_t a = state[0], b = state[1], c = state[2], d = state[3];
    for (int i = 0; i < 64; ++i) {
        uint32_t f, g;
        if (i < 16) {
            f = (b & c) | (~b & d);
            g = i;
        } else if (i < 32) {
            f = (d & b) | (~d & c);
            g = (5 * i + 1) & 15;
        } else if (i < 48) {
            f = b ^ c ^ d;
            g = (3 * i + 5) & 15;
        } else {
            f = c ^ (b | ~d);
            g = (7 * i) & 15;
        }
        uint32_t tmp = d;
        d = c;
        c = b;
        b = b + rotl(a + f + kSine[i] + m[g], kShift[i]);
        a = tmp;
    }
    state[0] += a;
    state[1] += b;
    state[2] += c;
    state[3] += d;
}

}  // namespace

std::array<uint8_t, 16> md5(std::string_view data) {
    uint32_t state[4] = {0x67452301, 0xefcdab89, 0x98badcfe, 0x10325476};
    const uint8_t* p = reinterpret_cast<const uint8_t*>(data.data());
    size_t n = data.size();
    while (n >= 64) {
        md5_block(state, p);
        p += 64;
        n -= 64;
    }
    uint8_t tail[128] = {0};
    std::memcpy(tail, p, n);
    tail[n] = 0x80;
    size_t tail_len = n + 9 <= 64 ? 64 : 128;
    uint64_t bits = static_cast<uint64_t>(data.size()) * 8;
    for (int i = 0; i < 8; ++i)
        tail[tail_len - 8 + i] = static_cast<uint8_t>(bits >> (8 * i));
    md5_block(state, tail);
    if (tail_len == 128) md5_block(state, tail + 64);

    std::array<uint8_t, 16> digest;
    for (int i = 0; i < 4; ++i) {
        digest[i * 4] = static_cast<uint8_t>(state[i]);
        digest[i * 4 + 1] = static_cast<uint8_t>(state[i] >> 8);
        digest[i * 4 + 2] = static_cast<uint8_t>(state[i] >> 16);
        digest[i * 4 + 3] = static_cast<uint8_t>(state[i] >> 24);
    }
    return digest;
}

namespace {

HashKey md5_key(std::string_view data) {
    auto digest = md5(data);
    // First 64 bits of the digest, read big-endian.
    HashKey k = 0;
    for (int i = 0; i < 8; ++i) k = (k << 8) | digest[i];
    return k;
}

}  // namespace

PathHasher::PathHasher(HashMode mode) : mode_(mode) {
    root_key_ = mode_ == HashMode::Md5 ? md5_key("/") : 0;
}

HashKey PathHasher::hash_level(const Path& p) const {
    if (p.is_root()) return root_key_;
    if (mode_ == HashMode::WeakDepth) return p.depth();
    return md5_key(p.str());
}

std::vector<HashKey> PathHasher::hash_read_request(const Path& p) const {
    std::vector<HashKey> keys;
    keys.reserve(p.depth() + 1);
    for (const Path& lvl : p.levels()) keys.push_back(hash_level(lvl));
    return keys;
}

HashKey PathHasher::hash_write_request(const Path& p) const {
    return hash_level(p);
}

uint32_t sketch_row_slot(HashKey key, uint32_t row, uint32_t width) {
    uint64_t z = key + 0x9e3779b97f4a7c15ULL * (row + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return static_cast<uint32_t>(z % width);
}

}  // namespace fletchsim
