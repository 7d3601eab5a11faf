#include "fletchsim/metadata.hpp"

namespace fletchsim {

namespace {

void put16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void put32(std::vector<uint8_t>& out, uint32_t v) {
    put16(out, static_cast<uint16_t>(v >> 16));
    put16(out, static_cast<uint16_t>(v));
}

void put64(std::vector<uint8_t>& out, uint64_t v) {
    put32(out, static_cast<uint32_t>(v >> 32));
    put32(out, static_cast<uint32_t>(v));
}

uint16_t get16(std::span<const uint8_t> in, size_t at) {
    return static_cast<uint16_t>((in[at] << 8) | in[at + 1]);
}

uint32_t get32(std::span<const uint8_t> in, size_t at) {
    return (static_cast<uint32_t>(get16(in, at)) << 16) | get16(in, at + 2);
}

uint64_t get64(std::span<const uint8_t> in, size_t at) {
    return (static_cast<uint64_t>(get32(in, at)) << 32) | get32(in, at + 4);
}

}  // namespace

// Layout (big-endian):
//   common: kind(1) mode(2) owner(4) group(4) mtime(4) atime(4)  = 19
//   file:   size(8) replication(2) reserved(11)                  = 40
//   dir:    reserved(5)                                          = 24
// The deleted flag rides in the first reserved byte.
std::vector<uint8_t> MetadataRecord::serialize() const {
    std::vector<uint8_t> out;
    out.reserve(wire_size());
    out.push_back(static_cast<uint8_t>(kind));
    put16(out, mode & kModeMask);
    put32(out, owner_id);
    put32(out, group_id);
    put32(out, mtime);
    put32(out, atime);
    if (kind == NodeKind::File) {
        put64(out, size);
        put16(out, replication);
    }
    out.push_back(deleted ? 1 : 0);
    out.resize(wire_size(), 0);
    return out;
}

std::optional<MetadataRecord> MetadataRecord::deserialize(
    std::span<const uint8_t> in) {
    if (in.size() != kFileRecordBytes && in.size() != kDirRecordBytes)
        return std::nullopt;
    MetadataRecord rec;
    if (in[0] > 1) return std::nullopt;
    rec.kind = static_cast<NodeKind>(in[0]);
    if (rec.wire_size() != in.size()) return std::nullopt;
    rec.mode = get16(in, 1) & kModeMask;
    rec.owner_id = get32(in, 3);
    rec.group_id = get32(in, 7);
    rec.mtime = get32(in, 11);
    rec.atime = get32(in, 15);
    size_t at = 19;
    if (rec.kind == NodeKind::File) {
        rec.size = get64(in, at);
        rec.replication = get16(in, at + 8);
        at += 10;
    } else {
        rec.size = 0;
        rec.replication = 0;
    }
    rec.deleted = in[at] != 0;
    return rec;
}

bool permission_check(const MetadataRecord& rec, const Principal& who,
                      Access need) {
    uint16_t triplet;
    if (who.uid == rec.owner_id) {
        triplet = (rec.mode >> 6) & 7;
    } else if (who.in_group(rec.group_id)) {
        triplet = (rec.mode >> 3) & 7;
    } else {
        triplet = rec.mode & 7;
    }
    switch (need) {
        case Access::Read: return (triplet & 4) != 0;
        case Access::Write: return (triplet & 2) != 0;
        case Access::Traverse: return (triplet & 1) != 0;
    }
    return false;
}

}  // namespace fletchsim
