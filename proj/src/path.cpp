#include "fletchsim/path.hpp"

#include <cstdio>
#include <cstdlib>

namespace fletchsim {

std::optional<Path> Path::parse(std::string_view raw) {
    if (raw.empty() || raw[0] != '/') return std::nullopt;
    std::vector<std::string> parts;
    size_t i = 1;
    while (i <= raw.size()) {
        size_t j = raw.find('/', i);
        if (j == std::string_view::npos) j = raw.size();
        if (j == i) {
            // "/" alone is the root; anything else with an empty
            // component ("//", trailing slash) is malformed.
            if (raw.size() == 1) break;
            return std::nullopt;
        }
        std::string_view comp = raw.substr(i, j - i);
        if (comp.size() > kMaxComponentBytes) return std::nullopt;
        parts.emplace_back(comp);
        i = j + 1;
        if (j == raw.size()) break;
        if (i > raw.size() || i == raw.size()) return std::nullopt;  // trailing '/'
    }
    return Path(std::move(parts));
}

Path Path::require(std::string_view raw) {
    auto p = parse(raw);
    if (!p) {
        std::fprintf(stderr, "bad path literal: %.*s\n",
                     static_cast<int>(raw.size()), raw.data());
        std::abort();
    }
    return *std::move(p);
}

Path Path::level(size_t n) const {
    return Path(std::vector<std::string>(components_.begin(),
                                         components_.begin() + n));
}

std::vector<Path> Path::levels() const {
    std::vector<Path> out;
    out.reserve(depth() + 1);
    for (size_t i = 0; i <= depth(); ++i) out.push_back(level(i));
    return out;
}

Path Path::parent() const {
    if (is_root()) return *this;
    return level(depth() - 1);
}

Path Path::child(std::string name) const {
    std::vector<std::string> parts = components_;
    parts.push_back(std::move(name));
    return Path(std::move(parts));
}

bool Path::is_ancestor_of(const Path& q) const {
    if (depth() >= q.depth()) return false;
    for (size_t i = 0; i < depth(); ++i) {
        if (components_[i] != q.components_[i]) return false;
    }
    return true;
}

std::string Path::str() const {
    if (is_root()) return "/";
    std::string s;
    for (const auto& c : components_) {
        s += '/';
        s += c;
    }
    return s;
}

}  // namespace fletchsim
