#pragma once

#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "fletchsim/metadata.hpp"
#include "fletchsim/path.hpp"
#include "fletchsim/status.hpp"

namespace fletchsim {

enum class OpKind {
    Open,
    Close,
    Stat,
    Statdir,
    Readdir,
    Create,
    Mkdir,
    Rmdir,
    Delete,
    Rename,
    Chmod,
    ChmodRecursive,
    Chown,
    ChownRecursive,
    Utime,
};

const char* op_name(OpKind k);
std::optional<OpKind> op_from_name(const std::string& name);

// open/close/stat/statdir: single-path reads; readdir: multi-path read;
// chmod_recursive/chown_recursive: multi-path writes; the rest are
// single-path writes.
bool op_is_read(OpKind k);
bool op_is_multi_path(OpKind k);

struct MetaOp {
    OpKind kind = OpKind::Stat;
    Path target;
    uint16_t new_mode = 0;
    uint32_t new_owner = 0;
    uint32_t new_group = 0;
    uint32_t new_mtime = 0;
    uint32_t new_atime = 0;
    Path rename_to;
};

struct DirEntry {
    std::string name;
    MetadataRecord record;
};

struct OpResult {
    Status status = Status::Ok;
    std::optional<MetadataRecord> record;   // reads
    std::vector<DirEntry> listing;          // readdir
    std::vector<Path> multi_updated;        // recursive writes, target last
};

// One metadata shard: a rooted tree of live and mark-deleted nodes.
// rmdir/delete/rename leave tombstones; create over a tombstone revives
// the name. The root is never deleted and its mode never changes.
class NamespaceTree {
  public:
    NamespaceTree();

    // Full operation with root-down resolution and permission checks.
    OpResult apply(const MetaOp& op, const Principal& who, uint32_t now);

    // Raw insertion for builders and snapshot import: creates missing
    // ancestor directories, no permission checks.
    void insert(const Path& p, const MetadataRecord& rec);

    // Raw removal (node and child-list entry, no tombstone); placement
    // moves between shards use this.
    void erase_raw(const Path& p);

    // Live-node lookup (tombstones excluded).
    const MetadataRecord* find(const Path& p) const;
    bool exists(const Path& p) const { return find(p) != nullptr; }

    // Live children names of a directory, sorted.
    std::vector<std::string> children_of(const Path& p) const;

    // Visits every live node root-down (parents before children).
    void visit(const std::function<void(const Path&, const MetadataRecord&)>& fn) const;

    size_t live_count() const;

    // Snapshot lines: path kind mode owner group size replication.
    void export_snapshot(std::ostream& out) const;
    static std::optional<NamespaceTree> import_snapshot(std::istream& in);

  private:
    struct Node {
        MetadataRecord rec;
        std::set<std::string> children;  // includes tombstoned names
    };

    Node* get(const std::string& key);
    const Node* get(const std::string& key) const;
    Status resolve_parents(const Path& target, const Principal& who) const;
    void collect_live(const Path& at, std::vector<Path>& out) const;

    std::unordered_map<std::string, Node> nodes_;
};

}  // namespace fletchsim
