#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace fletchsim {

enum class NodeKind : uint8_t { File = 0, Directory = 1 };

constexpr size_t kFileRecordBytes = 40;
constexpr size_t kDirRecordBytes = 24;

// Mode bits, POSIX layout: low 9 bits rwxrwxrwx, then sticky/setgid/setuid.
constexpr uint16_t kModeMask = 07777;

struct Principal {
    uint32_t uid = 1000;
    std::vector<uint32_t> gids = {1000};

    bool in_group(uint32_t gid) const {
        for (uint32_t g : gids)
            if (g == gid) return true;
        return false;
    }
};

enum class Access { Traverse, Read, Write };

// Per-path metadata value. Serializes to exactly 40 bytes for files and
// 24 for directories; size/replication are meaningful for files only.
struct MetadataRecord {
    NodeKind kind = NodeKind::File;
    uint16_t mode = 0644;
    uint32_t owner_id = 1000;
    uint32_t group_id = 1000;
    uint32_t mtime = 0;
    uint32_t atime = 0;
    uint64_t size = 0;
    uint16_t replication = 3;
    bool deleted = false;

    size_t wire_size() const {
        return kind == NodeKind::File ? kFileRecordBytes : kDirRecordBytes;
    }

    std::vector<uint8_t> serialize() const;
    static std::optional<MetadataRecord> deserialize(std::span<const uint8_t> in);

    bool operator==(const MetadataRecord& o) const = default;
};

// POSIX-style bit check against one record: Traverse needs x, Read needs
// r, Write needs w, selected from the owner/group/other triplet.
bool permission_check(const MetadataRecord& rec, const Principal& who,
                      Access need);

}  // namespace fletchsim
