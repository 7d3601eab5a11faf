#include <string>

#include "doctest.h"
#include "fletchsim/metadata.hpp"
#include "fletchsim/path.hpp"

using namespace fletchsim;

TEST_CASE("path parsing") {
    auto p = Path::parse("/a/b/c.txt");
    REQUIRE(p.has_value());
    CHECK(p->depth() == 3);
    CHECK(p->components() == std::vector<std::string>{"a", "b", "c.txt"});
    CHECK(p->str() == "/a/b/c.txt");

    auto root = Path::parse("/");
    REQUIRE(root.has_value());
    CHECK(root->depth() == 0);
    CHECK(root->is_root());
    CHECK(root->str() == "/");

    CHECK(!Path::parse("/a//b").has_value());
    CHECK(!Path::parse("").has_value());
    CHECK(!Path::parse("a/b").has_value());
    CHECK(!Path::parse("/a/").has_value());
    CHECK(!Path::parse("/a/" + std::string(256, 'x')).has_value());
    CHECK(Path::parse("/a/" + std::string(255, 'x')).has_value());
}

TEST_CASE("path levels") {
    Path p = Path::require("/a/b/c.txt");
    auto lv = p.levels();
    REQUIRE(lv.size() == 4);
    CHECK(lv[0].str() == "/");
    CHECK(lv[1].str() == "/a");
    CHECK(lv[2].str() == "/a/b");
    CHECK(lv[3].str() == "/a/b/c.txt");

    CHECK(Path::require("/").levels().size() == 1);
    auto lx = Path::require("/x").levels();
    REQUIRE(lx.size() == 2);
    CHECK(lx[0].str() == "/");
    CHECK(lx[1].str() == "/x");
}

TEST_CASE("ancestor relation is a strict prefix") {
    Path a = Path::require("/a");
    Path ab = Path::require("/a/b");
    CHECK(a.is_ancestor_of(ab));
    CHECK(!a.is_ancestor_of(a));
    CHECK(!ab.is_ancestor_of(a));
    CHECK(Path::require("/").is_ancestor_of(a));
    CHECK(!Path::require("/ab").is_ancestor_of(ab));
}

TEST_CASE("record wire sizes are exactly 40 and 24 bytes") {
    MetadataRecord file;
    file.kind = NodeKind::File;
    file.size = 123456;
    file.replication = 3;
    auto fb = file.serialize();
    CHECK(fb.size() == 40);

    MetadataRecord dir;
    dir.kind = NodeKind::Directory;
    dir.size = 0;
    dir.replication = 0;
    auto db = dir.serialize();
    CHECK(db.size() == 24);
}

TEST_CASE("record round-trips bit-exactly") {
    MetadataRecord rec;
    rec.kind = NodeKind::File;
    rec.mode = 0754;
    rec.owner_id = 0xdeadbeef;
    rec.group_id = 42;
    rec.mtime = 1234567;
    rec.atime = 7654321;
    rec.size = 0x123456789abcdefULL;
    rec.replication = 9;
    rec.deleted = true;

    auto bytes = rec.serialize();
    auto back = MetadataRecord::deserialize(bytes);
    REQUIRE(back.has_value());
    CHECK(*back == rec);
    CHECK(back->serialize() == bytes);

    MetadataRecord dir;
    dir.kind = NodeKind::Directory;
    dir.mode = 0711;
    dir.size = 0;
    dir.replication = 0;
    auto db = dir.serialize();
    auto dback = MetadataRecord::deserialize(db);
    REQUIRE(dback.has_value());
    CHECK(*dback == dir);
}

TEST_CASE("record round-trip property over random records") {
    uint64_t state = 99;
    auto next = [&]() {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return state >> 16;
    };
    for (int i = 0; i < 2000; ++i) {
        MetadataRecord rec;
        rec.kind = next() % 2 ? NodeKind::Directory : NodeKind::File;
        rec.mode = static_cast<uint16_t>(next() & kModeMask);
        rec.owner_id = static_cast<uint32_t>(next());
        rec.group_id = static_cast<uint32_t>(next());
        rec.mtime = static_cast<uint32_t>(next());
        rec.atime = static_cast<uint32_t>(next());
        if (rec.kind == NodeKind::File) {
            rec.size = next();
            rec.replication = static_cast<uint16_t>(next());
        } else {
            rec.size = 0;
            rec.replication = 0;
        }
        rec.deleted = next() % 2;
        auto bytes = rec.serialize();
        CHECK(bytes.size() == rec.wire_size());
        auto back = MetadataRecord::deserialize(bytes);
        REQUIRE(back.has_value());
        CHECK(*back == rec);
    }
}

TEST_CASE("permission bits") {
    MetadataRecord dir;
    dir.kind = NodeKind::Directory;
    dir.owner_id = 1;
    dir.group_id = 1;

    Principal other{2, {2}};
    Principal owner{1, {1}};
    Principal groupie{3, {1}};

    dir.mode = 0755;
    CHECK(permission_check(dir, other, Access::Traverse));
    dir.mode = 0700;
    CHECK(!permission_check(dir, other, Access::Traverse));
    CHECK(permission_check(dir, owner, Access::Traverse));

    MetadataRecord file;
    file.kind = NodeKind::File;
    file.owner_id = 1;
    file.group_id = 1;
    file.mode = 0644;
    CHECK(permission_check(file, owner, Access::Read));
    CHECK(permission_check(file, owner, Access::Write));
    CHECK(permission_check(file, groupie, Access::Read));
    CHECK(!permission_check(file, groupie, Access::Write));
    CHECK(permission_check(file, other, Access::Read));
    CHECK(!permission_check(file, other, Access::Write));
}
