#include <map>
#include <sstream>

#include "doctest.h"
#include "fletchsim/namespace_tree.hpp"
#include "fletchsim/rng.hpp"

using namespace fletchsim;

namespace {

// Reference implementation: a flat map from full path string to record
// with explicit prefix validation. Deliberately independent of
// NamespaceTree's structure.
class FlatModel {
  public:
    FlatModel() {
        MetadataRecord root;
        root.kind = NodeKind::Directory;
        root.mode = 0755;
        root.owner_id = 1000;
        root.group_id = 1000;
        root.size = 0;
        root.replication = 0;
        map_["/"] = root;
    }

    OpResult apply(const MetaOp& op, const Principal& who, uint32_t now) {
        OpResult res;
        const std::string t = op.target.str();
        if (op.target.is_root() && !op_is_read(op.kind)) {
            res.status = Status::PermissionDenied;
            return res;
        }
        res.status = check_parents(op.target, who);
        if (res.status != Status::Ok) return res;

        switch (op.kind) {
            case OpKind::Open:
            case OpKind::Close:
            case OpKind::Stat:
            case OpKind::Statdir: {
                auto it = map_.find(t);
                if (it == map_.end()) res.status = Status::NotFound;
                else if (!permission_check(it->second, who, Access::Read))
                    res.status = Status::PermissionDenied;
                else res.record = it->second;
                return res;
            }
            case OpKind::Readdir: {
                auto it = map_.find(t);
                if (it == map_.end()) { res.status = Status::NotFound; return res; }
                if (it->second.kind != NodeKind::Directory) {
                    res.status = Status::NotADirectory;
                    return res;
                }
                if (!permission_check(it->second, who, Access::Read)) {
                    res.status = Status::PermissionDenied;
                    return res;
                }
                res.record = it->second;
                for (const auto& [k, v] : map_) {
                    if (k == "/" || k == t) continue;
                    std::string prefix = t == "/" ? "/" : t + "/";
                    if (k.rfind(prefix, 0) == 0 &&
                        k.find('/', prefix.size()) == std::string::npos) {
                        res.listing.push_back({k.substr(prefix.size()), v});
                    }
                }
                return res;
            }
            case OpKind::Create:
            case OpKind::Mkdir: {
                if (!permission_check(map_.at(op.target.parent().str()), who,
                                      Access::Write)) {
                    res.status = Status::PermissionDenied;
                    return res;
                }
                if (map_.count(t)) { res.status = Status::AlreadyExists; return res; }
                MetadataRecord rec;
                if (op.kind == OpKind::Mkdir) {
                    rec.kind = NodeKind::Directory;
                    rec.mode = op.new_mode ? op.new_mode : 0755;
                    rec.size = 0;
                    rec.replication = 0;
                } else {
                    rec.kind = NodeKind::File;
                    rec.mode = op.new_mode ? op.new_mode : 0644;
                }
                rec.owner_id = who.uid;
                rec.group_id = who.gids.empty() ? 0 : who.gids[0];
                rec.mtime = now;
                rec.atime = now;
                map_[t] = rec;
                res.record = rec;
                return res;
            }
            case OpKind::Delete:
            case OpKind::Rmdir: {
                if (!permission_check(map_.at(op.target.parent().str()), who,
                                      Access::Write)) {
                    res.status = Status::PermissionDenied;
                    return res;
                }
                auto it = map_.find(t);
                if (it == map_.end()) { res.status = Status::NotFound; return res; }
                bool is_dir = it->second.kind == NodeKind::Directory;
                if (op.kind == OpKind::Rmdir) {
                    if (!is_dir) { res.status = Status::NotADirectory; return res; }
                    if (has_child(t)) { res.status = Status::NotEmpty; return res; }
                } else if (is_dir) {
                    res.status = Status::NotADirectory;
                    return res;
                }
                map_.erase(it);
                return res;
            }
            case OpKind::Rename: {
                auto it = map_.find(t);
                if (it == map_.end()) { res.status = Status::NotFound; return res; }
                if (it->second.kind != NodeKind::File) {
                    res.status = Status::NotADirectory;
                    return res;
                }
                if (!permission_check(map_.at(op.target.parent().str()), who,
                                      Access::Write)) {
                    res.status = Status::PermissionDenied;
                    return res;
                }
                if (op.rename_to.is_root()) {
                    res.status = Status::MalformedPath;
                    return res;
                }
                res.status = check_parents(op.rename_to, who);
                if (res.status != Status::Ok) return res;
                if (!permission_check(map_.at(op.rename_to.parent().str()),
                                      who, Access::Write)) {
                    res.status = Status::PermissionDenied;
                    return res;
                }
                if (map_.count(op.rename_to.str())) {
                    res.status = Status::AlreadyExists;
                    return res;
                }
                MetadataRecord moved = it->second;
                map_.erase(it);
                map_[op.rename_to.str()] = moved;
                res.record = moved;
                return res;
            }
            default: {  // chmod/chown/utime and recursive forms
                auto it = map_.find(t);
                if (it == map_.end()) { res.status = Status::NotFound; return res; }
                if (!permission_check(it->second, who, Access::Write)) {
                    res.status = Status::PermissionDenied;
                    return res;
                }
                std::vector<std::string> targets = {t};
                if (op_is_multi_path(op.kind)) {
                    std::string prefix = t == "/" ? "/" : t + "/";
                    for (const auto& [k, v] : map_) {
                        if (k != t && k.rfind(prefix, 0) == 0)
                            targets.push_back(k);
                    }
                }
                for (const auto& k : targets) {
                    MetadataRecord& rec = map_[k];
                    switch (op.kind) {
                        case OpKind::Chmod:
                        case OpKind::ChmodRecursive:
                            rec.mode = op.new_mode & kModeMask;
                            break;
                        case OpKind::Chown:
                        case OpKind::ChownRecursive:
                            rec.owner_id = op.new_owner;
                            rec.group_id = op.new_group;
                            break;
                        case OpKind::Utime:
                            rec.mtime = op.new_mtime;
                            rec.atime = op.new_atime;
                            break;
                        default:
                            break;
                    }
                }
                res.record = map_[t];
                return res;
            }
        }
    }

    const std::map<std::string, MetadataRecord>& state() const { return map_; }

  private:
    Status check_parents(const Path& p, const Principal& who) const {
        for (size_t i = 0; i < p.depth(); ++i) {
            auto it = map_.find(p.level(i).str());
            if (it == map_.end()) return Status::NotFound;
            if (it->second.kind != NodeKind::Directory)
                return Status::NotADirectory;
            if (!permission_check(it->second, who, Access::Traverse))
                return Status::PermissionDenied;
        }
        return Status::Ok;
    }

    bool has_child(const std::string& t) const {
        std::string prefix = t + "/";
        auto it = map_.upper_bound(t);
        return it != map_.end() && it->first.rfind(prefix, 0) == 0;
    }

    std::map<std::string, MetadataRecord> map_;
};

MetaOp random_op(Rng& rng) {
    static const OpKind kinds[] = {
        OpKind::Open,   OpKind::Stat,   OpKind::Readdir,
        OpKind::Create, OpKind::Mkdir,  OpKind::Rmdir,
        OpKind::Delete, OpKind::Rename, OpKind::Chmod,
        OpKind::ChmodRecursive, OpKind::ChownRecursive,
        OpKind::Chown,  OpKind::Utime};
    static const char* names[] = {"a", "b", "c", "d.txt", "e.txt"};
    MetaOp op;
    op.kind = kinds[rng.next_below(std::size(kinds))];
    std::vector<std::string> parts;
    size_t depth = rng.next_below(4);
    for (size_t i = 0; i < depth; ++i)
        parts.push_back(names[rng.next_below(std::size(names))]);
    op.target = Path(parts);
    op.new_mode = static_cast<uint16_t>(rng.next_below(0777) + 1);
    op.new_owner = static_cast<uint32_t>(rng.next_below(3) + 1000);
    op.new_group = static_cast<uint32_t>(rng.next_below(3) + 1000);
    op.new_mtime = static_cast<uint32_t>(rng.next_below(1000));
    op.new_atime = static_cast<uint32_t>(rng.next_below(1000));
    if (op.kind == OpKind::Rename) {
        std::vector<std::string> dst;
        size_t dd = rng.next_below(3);
        for (size_t i = 0; i < dd; ++i)
            dst.push_back(names[rng.next_below(std::size(names))]);
        dst.push_back("r" + std::to_string(rng.next_below(50)));
        op.rename_to = Path(dst);
    }
    return op;
}

}  // namespace

TEST_CASE("basic operation semantics") {
    NamespaceTree tree;
    Principal who{1000, {1000}};

    MetaOp mk{.kind = OpKind::Mkdir, .target = Path::require("/a")};
    CHECK(tree.apply(mk, who, 7).status == Status::Ok);
    MetaOp st{.kind = OpKind::Stat, .target = Path::require("/a")};
    auto res = tree.apply(st, who, 8);
    REQUIRE(res.status == Status::Ok);
    CHECK(res.record->kind == NodeKind::Directory);
    CHECK(res.record->mtime == 7);

    MetaOp create{.kind = OpKind::Create,
                  .target = Path::require("/nope/b.txt")};
    CHECK(tree.apply(create, who, 9).status == Status::NotFound);

    MetaOp dup{.kind = OpKind::Mkdir, .target = Path::require("/a")};
    CHECK(tree.apply(dup, who, 9).status == Status::AlreadyExists);

    // rmdir only empties; delete only files.
    MetaOp cf{.kind = OpKind::Create, .target = Path::require("/a/f.txt")};
    CHECK(tree.apply(cf, who, 10).status == Status::Ok);
    MetaOp rmdir{.kind = OpKind::Rmdir, .target = Path::require("/a")};
    CHECK(tree.apply(rmdir, who, 11).status == Status::NotEmpty);
    MetaOp del{.kind = OpKind::Delete, .target = Path::require("/a")};
    CHECK(tree.apply(del, who, 11).status == Status::NotADirectory);
    MetaOp delf{.kind = OpKind::Delete, .target = Path::require("/a/f.txt")};
    CHECK(tree.apply(delf, who, 12).status == Status::Ok);
    CHECK(tree.apply(rmdir, who, 13).status == Status::Ok);
    CHECK(tree.find(Path::require("/a")) == nullptr);

    // Root writes are refused.
    MetaOp chroot{.kind = OpKind::Chmod, .target = Path::require("/"),
                  .new_mode = 0700};
    CHECK(tree.apply(chroot, who, 14).status == Status::PermissionDenied);
}

TEST_CASE("recursive chmod matches a brute-force walk") {
    NamespaceTree tree;
    Principal who{1000, {1000}};
    for (const char* p :
         {"/a/x.txt", "/a/b/y.txt", "/a/b/z.txt"}) {
        tree.insert(Path::require(p), MetadataRecord{});
    }

    MetaOp op{.kind = OpKind::ChmodRecursive, .target = Path::require("/a"),
              .new_mode = 0700};
    auto res = tree.apply(op, who, 1);
    REQUIRE(res.status == Status::Ok);
    CHECK(res.multi_updated.size() == 5);  // 4 descendants + /a
    CHECK(res.multi_updated.back().str() == "/a");

    size_t checked = 0;
    tree.visit([&](const Path& p, const MetadataRecord& rec) {
        if (p.is_root() || p.str() == "/mkrm") return;
        if (p.str() == "/a" || Path::require("/a").is_ancestor_of(p)) {
            CHECK(rec.mode == 0700);
            ++checked;
        }
    });
    CHECK(checked == 5);
}

TEST_CASE("randomized op sequences match the flat-map oracle") {
    NamespaceTree tree;
    FlatModel model;
    Rng rng(0xfeedULL);
    Principal who{1000, {1000}};
    Principal stranger{2000, {2000}};

    int executed = 0;
    for (int i = 0; i < 12000; ++i) {
        MetaOp op = random_op(rng);
        const Principal& p = rng.next_below(10) == 0 ? stranger : who;
        OpResult a = tree.apply(op, p, static_cast<uint32_t>(i));
        OpResult b = model.apply(op, p, static_cast<uint32_t>(i));
        CAPTURE(i);
        CAPTURE(op_name(op.kind));
        CAPTURE(op.target.str());
        REQUIRE(a.status == b.status);
        REQUIRE(a.record.has_value() == b.record.has_value());
        if (a.record) REQUIRE(a.record->serialize() == b.record->serialize());
        if (op.kind == OpKind::Readdir && a.status == Status::Ok) {
            auto names_of = [](const std::vector<DirEntry>& l) {
                std::vector<std::string> n;
                for (const auto& e : l) n.push_back(e.name);
                std::sort(n.begin(), n.end());
                return n;
            };
            REQUIRE(names_of(a.listing) == names_of(b.listing));
        }
        ++executed;
    }
    CHECK(executed == 12000);

    // Terminal state equivalence, node by node.
    size_t live = 0;
    tree.visit([&](const Path& p, const MetadataRecord& rec) {
        auto it = model.state().find(p.str());
        REQUIRE(it != model.state().end());
        CHECK(it->second.serialize() == rec.serialize());
        ++live;
    });
    CHECK(live == model.state().size());
}

TEST_CASE("snapshot export/import round trip") {
    NamespaceTree tree;
    MetadataRecord f;
    f.kind = NodeKind::File;
    f.mode = 0640;
    f.owner_id = 7;
    f.group_id = 8;
    f.size = 999;
    f.replication = 2;
    tree.insert(Path::require("/x/y/file.bin"), f);

    std::stringstream ss;
    tree.export_snapshot(ss);
    auto back = NamespaceTree::import_snapshot(ss);
    REQUIRE(back.has_value());
    const MetadataRecord* rec = back->find(Path::require("/x/y/file.bin"));
    REQUIRE(rec != nullptr);
    CHECK(rec->mode == 0640);
    CHECK(rec->size == 999);
    CHECK(rec->replication == 2);
    CHECK(back->find(Path::require("/x/y")) != nullptr);
    CHECK(back->live_count() == tree.live_count());
}
