#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fletchsim {

constexpr size_t kMaxComponentBytes = 255;

// A slash-rooted path as an ordered component list. The root is implicit
// and has depth 0; /a/b/c.txt has depth 3.
class Path {
  public:
    Path() = default;
    explicit Path(std::vector<std::string> components)
        : components_(std::move(components)) {}

    // Parses an absolute path string. Returns nullopt for a missing
    // leading slash, an empty component, or a component over 255 bytes.
    static std::optional<Path> parse(std::string_view raw);

    // parse() that aborts on invalid input; for trusted literals.
    static Path require(std::string_view raw);

    size_t depth() const { return components_.size(); }
    bool is_root() const { return components_.empty(); }

    const std::vector<std::string>& components() const { return components_; }
    const std::string& component(size_t i) const { return components_[i]; }

    // Prefix of the first n components; level(0) is the root.
    Path level(size_t n) const;

    // [root, level(1), ..., this], root-down.
    std::vector<Path> levels() const;

    Path parent() const;
    Path child(std::string name) const;

    // True iff this is a strict prefix of q.
    bool is_ancestor_of(const Path& q) const;

    // Canonical form: "/" for the root, otherwise "/" + components
    // joined by "/" with no trailing slash. This exact byte string is
    // what gets hashed.
    std::string str() const;

    bool operator==(const Path& o) const { return components_ == o.components_; }
    bool operator!=(const Path& o) const { return !(*this == o); }
    bool operator<(const Path& o) const { return components_ < o.components_; }

  private:
    std::vector<std::string> components_;
};

}  // namespace fletchsim
