#include "fletchsim/namespace_tree.hpp"

#include <algorithm>
#include <sstream>

namespace fletchsim {

const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::Open: return "open";
        case OpKind::Close: return "close";
        case OpKind::Stat: return "stat";
        case OpKind::Statdir: return "statdir";
        case OpKind::Readdir: return "readdir";
        case OpKind::Create: return "create";
        case OpKind::Mkdir: return "mkdir";
        case OpKind::Rmdir: return "rmdir";
        case OpKind::Delete: return "delete";
        case OpKind::Rename: return "rename";
        case OpKind::Chmod: return "chmod";
        case OpKind::ChmodRecursive: return "chmod_r";
        case OpKind::Chown: return "chown";
        case OpKind::ChownRecursive: return "chown_r";
        case OpKind::Utime: return "utime";
    }
    return "?";
}

std::optional<OpKind> op_from_name(const std::string& name) {
    static const std::pair<const char*, OpKind> table[] = {
        {"open", OpKind::Open},       {"close", OpKind::Close},
        {"stat", OpKind::Stat},       {"statdir", OpKind::Statdir},
        {"readdir", OpKind::Readdir}, {"create", OpKind::Create},
        {"mkdir", OpKind::Mkdir},     {"rmdir", OpKind::Rmdir},
        {"delete", OpKind::Delete},   {"rename", OpKind::Rename},
        {"chmod", OpKind::Chmod},     {"chmod_r", OpKind::ChmodRecursive},
        {"chown", OpKind::Chown},     {"chown_r", OpKind::ChownRecursive},
        {"utime", OpKind::Utime},
    };
    for (const auto& [n, k] : table)
        if (name == n) return k;
    return std::nullopt;
}

bool op_is_read(OpKind k) {
    switch (k) {
        case OpKind::Open:
        case OpKind::Close:
        case OpKind::Stat:
        case OpKind::Statdir:
        case OpKind::Readdir:
            return true;
        default:
            return false;
    }
}

bool op_is_multi_path(OpKind k) {
    return k == OpKind::Readdir || k == OpKind::ChmodRecursive ||
           k == OpKind::ChownRecursive;
}

namespace {

MetadataRecord make_dir(uint16_t mode, uint32_t owner, uint32_t group,
                        uint32_t now) {
    MetadataRecord rec;
    rec.kind = NodeKind::Directory;
    rec.mode = mode;
    rec.owner_id = owner;
    rec.group_id = group;
    rec.mtime = now;
    rec.atime = now;
    rec.size = 0;
    rec.replication = 0;
    return rec;
}

}  // namespace

NamespaceTree::NamespaceTree() {
    // The default principal owns the root; its record never changes.
    Node root;
    root.rec = make_dir(0755, 1000, 1000, 0);
    nodes_.emplace("/", std::move(root));
}

NamespaceTree::Node* NamespaceTree::get(const std::string& key) {
    auto it = nodes_.find(key);
    return it == nodes_.end() ? nullptr : &it->second;
}

const NamespaceTree::Node* NamespaceTree::get(const std::string& key) const {
    auto it = nodes_.find(key);
    return it == nodes_.end() ? nullptr : &it->second;
}

const MetadataRecord* NamespaceTree::find(const Path& p) const {
    const Node* n = get(p.str());
    if (!n || n->rec.deleted) return nullptr;
    return &n->rec;
}

// Checks existence and traverse permission on every internal directory
// of the target (root included, target excluded).
Status NamespaceTree::resolve_parents(const Path& target,
                                      const Principal& who) const {
    for (size_t i = 0; i < target.depth(); ++i) {
        const MetadataRecord* rec = find(target.level(i));
        if (!rec) return Status::NotFound;
        if (rec->kind != NodeKind::Directory) return Status::NotADirectory;
        if (!permission_check(*rec, who, Access::Traverse))
            return Status::PermissionDenied;
    }
    return Status::Ok;
}

void NamespaceTree::insert(const Path& p, const MetadataRecord& rec) {
    if (p.is_root()) return;
    for (size_t i = 1; i < p.depth(); ++i) {
        Path dir = p.level(i);
        std::string key = dir.str();
        if (!nodes_.count(key)) {
            nodes_.emplace(key, Node{make_dir(0755, 1000, 1000, 0), {}});
            get(dir.parent().str())->children.insert(dir.component(i - 1));
        } else {
            Node* n = get(key);
            if (n->rec.deleted) {
                n->rec = make_dir(0755, 1000, 1000, 0);
            }
        }
    }
    Node* parent = get(p.parent().str());
    parent->children.insert(p.component(p.depth() - 1));
    auto [it, fresh] = nodes_.emplace(p.str(), Node{rec, {}});
    if (!fresh) it->second.rec = rec;
}

void NamespaceTree::erase_raw(const Path& p) {
    if (p.is_root()) return;
    nodes_.erase(p.str());
    Node* parent = get(p.parent().str());
    if (parent) parent->children.erase(p.component(p.depth() - 1));
}

std::vector<std::string> NamespaceTree::children_of(const Path& p) const {
    std::vector<std::string> out;
    const Node* n = get(p.str());
    if (!n) return out;
    for (const auto& name : n->children) {
        const Node* c = get(p.child(name).str());
        if (c && !c->rec.deleted) out.push_back(name);
    }
    return out;
}

void NamespaceTree::visit(
    const std::function<void(const Path&, const MetadataRecord&)>& fn) const {
    std::vector<Path> stack = {Path()};
    while (!stack.empty()) {
        Path p = std::move(stack.back());
        stack.pop_back();
        const Node* n = get(p.str());
        if (!n || n->rec.deleted) continue;
        fn(p, n->rec);
        // Reverse order so the visit pops in sorted order.
        for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) {
            stack.push_back(p.child(*it));
        }
    }
}

size_t NamespaceTree::live_count() const {
    size_t n = 0;
    visit([&](const Path&, const MetadataRecord&) { ++n; });
    return n;
}

void NamespaceTree::collect_live(const Path& at, std::vector<Path>& out) const {
    const Node* n = get(at.str());
    if (!n) return;
    for (const auto& name : n->children) {
        Path c = at.child(name);
        const Node* cn = get(c.str());
        if (!cn || cn->rec.deleted) continue;
        out.push_back(c);
        collect_live(c, out);
    }
}

OpResult NamespaceTree::apply(const MetaOp& op, const Principal& who,
                              uint32_t now) {
    OpResult res;
    const Path& p = op.target;

    // Writes against the root are refused outright: the root's record is
    // fixed for the lifetime of the namespace.
    if (p.is_root() && !op_is_read(op.kind)) {
        res.status = Status::PermissionDenied;
        return res;
    }

    res.status = resolve_parents(p, who);
    if (res.status != Status::Ok) return res;

    switch (op.kind) {
        case OpKind::Open:
        case OpKind::Close:
        case OpKind::Stat:
        case OpKind::Statdir: {
            const MetadataRecord* rec = find(p);
            if (!rec) {
                res.status = Status::NotFound;
            } else if (!permission_check(*rec, who, Access::Read)) {
                res.status = Status::PermissionDenied;
            } else {
                res.record = *rec;
            }
            return res;
        }
        case OpKind::Readdir: {
            const MetadataRecord* rec = find(p);
            if (!rec) {
                res.status = Status::NotFound;
                return res;
            }
            if (rec->kind != NodeKind::Directory) {
                res.status = Status::NotADirectory;
                return res;
            }
            if (!permission_check(*rec, who, Access::Read)) {
                res.status = Status::PermissionDenied;
                return res;
            }
            res.record = *rec;
            for (const auto& name : children_of(p)) {
                res.listing.push_back({name, *find(p.child(name))});
            }
            return res;
        }
        case OpKind::Create:
        case OpKind::Mkdir: {
            const MetadataRecord* parent = find(p.parent());
            if (!permission_check(*parent, who, Access::Write)) {
                res.status = Status::PermissionDenied;
                return res;
            }
            if (find(p)) {
                res.status = Status::AlreadyExists;
                return res;
            }
            MetadataRecord rec;
            if (op.kind == OpKind::Mkdir) {
                rec = make_dir(op.new_mode ? op.new_mode : 0755, who.uid,
                               who.gids.empty() ? 0 : who.gids[0], now);
            } else {
                rec.kind = NodeKind::File;
                rec.mode = op.new_mode ? op.new_mode : 0644;
                rec.owner_id = who.uid;
                rec.group_id = who.gids.empty() ? 0 : who.gids[0];
                rec.mtime = now;
                rec.atime = now;
            }
            insert(p, rec);
            res.record = rec;
            return res;
        }
        case OpKind::Delete:
        case OpKind::Rmdir: {
            const MetadataRecord* parent = find(p.parent());
            if (!parent || !permission_check(*parent, who, Access::Write)) {
                res.status = Status::PermissionDenied;
                return res;
            }
            Node* n = get(p.str());
            if (!n || n->rec.deleted) {
                res.status = Status::NotFound;
                return res;
            }
            bool is_dir = n->rec.kind == NodeKind::Directory;
            if (op.kind == OpKind::Rmdir) {
                if (!is_dir) {
                    res.status = Status::NotADirectory;
                    return res;
                }
                if (!children_of(p).empty()) {
                    res.status = Status::NotEmpty;
                    return res;
                }
            } else if (is_dir) {
                res.status = Status::NotADirectory;
                return res;
            }
            n->rec.deleted = true;
            return res;
        }
        case OpKind::Rename: {
            // File-only: remove the source name, recreate the record at
            // the destination.
            Node* src = get(p.str());
            if (!src || src->rec.deleted) {
                res.status = Status::NotFound;
                return res;
            }
            if (src->rec.kind != NodeKind::File) {
                res.status = Status::NotADirectory;
                return res;
            }
            const MetadataRecord* src_parent = find(p.parent());
            if (!permission_check(*src_parent, who, Access::Write)) {
                res.status = Status::PermissionDenied;
                return res;
            }
            const Path& dst = op.rename_to;
            if (dst.is_root()) {
                res.status = Status::MalformedPath;
                return res;
            }
            res.status = resolve_parents(dst, who);
            if (res.status != Status::Ok) return res;
            const MetadataRecord* dst_parent = find(dst.parent());
            if (!permission_check(*dst_parent, who, Access::Write)) {
                res.status = Status::PermissionDenied;
                return res;
            }
            if (find(dst)) {
                res.status = Status::AlreadyExists;
                return res;
            }
            MetadataRecord moved = src->rec;
            src->rec.deleted = true;
            insert(dst, moved);
            res.record = moved;
            return res;
        }
        case OpKind::Chmod:
        case OpKind::Chown:
        case OpKind::Utime:
        case OpKind::ChmodRecursive:
        case OpKind::ChownRecursive: {
            Node* n = get(p.str());
            if (!n || n->rec.deleted) {
                res.status = Status::NotFound;
                return res;
            }
            if (!permission_check(n->rec, who, Access::Write)) {
                res.status = Status::PermissionDenied;
                return res;
            }
            std::vector<Path> targets;
            if (op_is_multi_path(op.kind)) {
                collect_live(p, targets);
                // Deepest first; the requested path goes last so cache
                // updates can be emitted in result order.
                std::sort(targets.begin(), targets.end(),
                          [](const Path& a, const Path& b) {
                              if (a.depth() != b.depth())
                                  return a.depth() > b.depth();
                              return a < b;
                          });
            }
            targets.push_back(p);
            for (const Path& t : targets) {
                MetadataRecord& rec = get(t.str())->rec;
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
            res.record = n->rec;
            if (op_is_multi_path(op.kind)) res.multi_updated = targets;
            return res;
        }
    }
    res.status = Status::MalformedPath;
    return res;
}

void NamespaceTree::export_snapshot(std::ostream& out) const {
    visit([&](const Path& p, const MetadataRecord& rec) {
        out << p.str() << '\t'
            << (rec.kind == NodeKind::Directory ? 'd' : 'f') << '\t' << std::oct
            << rec.mode << std::dec << '\t' << rec.owner_id << '\t'
            << rec.group_id << '\t' << rec.size << '\t' << rec.replication
            << '\n';
    });
}

std::optional<NamespaceTree> NamespaceTree::import_snapshot(std::istream& in) {
    NamespaceTree tree;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string path_str, kind_str;
        unsigned mode;
        MetadataRecord rec;
        uint32_t owner, group;
        uint64_t size;
        uint16_t repl;
        if (!(ls >> path_str >> kind_str >> std::oct >> mode >> std::dec >>
              owner >> group >> size >> repl))
            return std::nullopt;
        auto p = Path::parse(path_str);
        if (!p || (kind_str != "f" && kind_str != "d")) return std::nullopt;
        rec.kind = kind_str == "d" ? NodeKind::Directory : NodeKind::File;
        rec.mode = static_cast<uint16_t>(mode & kModeMask);
        rec.owner_id = owner;
        rec.group_id = group;
        rec.size = rec.kind == NodeKind::File ? size : 0;
        rec.replication = rec.kind == NodeKind::File ? repl : 0;
        if (p->is_root()) continue;
        tree.insert(*p, rec);
    }
    return tree;
}

}  // namespace fletchsim
