#include "doctest.h"
#include "fletchsim/lock_arrays.hpp"
#include "fletchsim/selfcheck.hpp"
#include "fletchsim/simulation.hpp"

using namespace fletchsim;

namespace {

BuiltNamespace two_file_ns() {
    BuiltNamespace ns;
    MetadataRecord dir;
    dir.kind = NodeKind::Directory;
    dir.mode = 0755;
    dir.owner_id = 1000;
    dir.group_id = 1000;
    dir.size = 0;
    dir.replication = 0;
    MetadataRecord file;
    file.kind = NodeKind::File;
    file.mode = 0644;
    file.owner_id = 1000;
    file.group_id = 1000;
    ns.tree.insert(Path::require("/a"), dir);
    ns.tree.insert(Path::require("/a/b.txt"), file);
    ns.tree.insert(Path::require("/a/sec.txt"), file);
    ns.files = {Path::require("/a/b.txt"), Path::require("/a/sec.txt")};
    ns.mkdir_area = Path::require("/mkrm");
    ns.tree.insert(ns.mkdir_area.child("seed"), dir);
    return ns;
}

SimConfig tiny_cfg() {
    SimConfig cfg;
    cfg.n_servers = 2;
    cfg.n_clients = 2;
    cfg.cache_capacity = 16;
    cfg.preload_files = 0;
    cfg.seed = 5;
    return cfg;
}

MetaOp openp(const char* p) {
    MetaOp op;
    op.kind = OpKind::Open;
    op.target = Path::require(p);
    return op;
}

}  // namespace

TEST_CASE("lock index mapping") {
    std::vector<HashKey> keys;
    for (uint64_t i = 0; i <= 10; ++i) keys.push_back(0x1111000000000000ULL + i);

    auto li3 = lock_index(3, keys, false);
    CHECK(li3.array == 3);
    CHECK(li3.slot == (keys[3] & 0xFFFF));

    // Levels past the eighth array share the level-8 key.
    auto li9 = lock_index(9, keys, false);
    CHECK(li9.array == 8);
    CHECK(li9.slot == (keys[8] & 0xFFFF));

    std::vector<HashKey> low = {0, 0x0005, 0x0007};
    auto li1 = lock_index(1, low, false);
    CHECK(li1.array == 1);
    CHECK(li1.slot == 5);

    // Single-lock mode collapses everything onto array 1 via level 1.
    auto s9 = lock_index(9, keys, true);
    CHECK(s9.array == 1);
    CHECK(s9.slot == (keys[1] & 0xFFFF));
}

TEST_CASE("lock counters flag underflow and overflow") {
    int violations = 0;
    LockCounterArrays locks([&](const char*) { ++violations; });
    locks.add(1, 5, 1);
    CHECK(locks.get(1, 5) == 1);
    locks.add(1, 5, -1);
    CHECK(locks.all_zero());
    locks.add(1, 5, -1);
    CHECK(violations == 1);
    CHECK(locks.get(1, 5) == 0);  // clamped
    locks.add(2, 9, 70000);
    CHECK(violations == 2);
    CHECK(locks.get(2, 9) == 0xFFFF);
}

TEST_CASE("cache lookup hits only on the installed token") {
    SimConfig cfg = tiny_cfg();
    WorkloadSpec spec;
    Simulation sim(cfg, spec, two_file_ns());
    sim.preload_exact({"/a", "/a/b.txt"});

    auto entry = sim.controller().cached_entry("/a/b.txt");
    REQUIRE(entry.has_value());
    const auto& mat = sim.dataplane().mat();
    CHECK(mat.lookup(entry->first, entry->second).has_value());
    CHECK(!mat.lookup(entry->first, kInvalidToken).has_value());
    CHECK(!mat.lookup(entry->first,
                      static_cast<Token>(entry->second + 1)).has_value());
}

TEST_CASE("controller admit, evict and sketch reset effects") {
    SimConfig cfg = tiny_cfg();
    WorkloadSpec spec;
    Simulation sim(cfg, spec, two_file_ns());
    auto& sw = sim.dataplane();

    CtrlMsg admit;
    admit.kind = CtrlMsg::Kind::Admit;
    CtrlMsg::AdmitEntry e;
    e.path = "/a";
    e.key = sim.hasher().hash_level(Path::require("/a"));
    e.token = 1;
    e.slot = 3;
    MetadataRecord rec;
    rec.kind = NodeKind::Directory;
    rec.size = 0;
    rec.replication = 0;
    e.record = rec;
    admit.entries.push_back(e);
    sw.apply_control(admit);

    CHECK(sw.mat().lookup(e.key, 1) == 3u);
    auto view = sw.slot_view(3);
    CHECK(view.in_use);
    CHECK(view.valid);
    CHECK(view.path == "/a");
    CHECK(view.frequency == 0);

    CtrlMsg evict;
    evict.kind = CtrlMsg::Kind::Evict;
    evict.kt.emplace_back(e.key, Token{1});
    sw.apply_control(evict);
    CHECK(!sw.mat().lookup(e.key, 1).has_value());
    CHECK(!sw.slot_view(3).in_use);

    // Evicting an unknown entry is a reported violation.
    sw.apply_control(evict);
    CHECK(sim.metrics().violations["evict_unknown_entry"] == 1);

    CtrlMsg reset;
    reset.kind = CtrlMsg::Kind::ResetSketch;
    sw.apply_control(reset);
    CHECK(sw.cms_estimate(12345) == 0);
    CHECK(sim.metrics().sketch_resets == 1);
}

TEST_CASE("miss path updates the sketch and reports past the threshold") {
    SimConfig cfg = tiny_cfg();
    cfg.cms_threshold = 10;
    WorkloadSpec spec;
    Simulation sim(cfg, spec, two_file_ns());

    // 10 misses stay quiet; the 11th crosses the strict threshold.
    Trace trace;
    trace.spec = spec;
    trace.n_clients = 1;
    for (int i = 0; i < 10; ++i) trace.entries.push_back({0, openp("/a/b.txt")});
    sim.load_trace(trace);
    sim.run();
    CHECK(sim.metrics().hot_reports == 0);

    Simulation sim2(cfg, spec, two_file_ns());
    Trace t2;
    t2.spec = spec;
    t2.n_clients = 1;
    for (int i = 0; i < 11; ++i) t2.entries.push_back({0, openp("/a/b.txt")});
    sim2.load_trace(t2);
    sim2.run();
    CHECK(sim2.metrics().hot_reports == 1);
    // The path got admitted once reported.
    CHECK(sim2.controller().is_cached("/a/b.txt"));
    CHECK(sim2.controller().is_cached("/a"));
}

TEST_CASE("permission failure inside the switch releases all locks") {
    // /a/sec.txt is 0600: a foreign principal learns tokens from the
    // server-side denial, and the second read is denied in-switch.
    BuiltNamespace ns = two_file_ns();
    MetadataRecord locked = *ns.tree.find(Path::require("/a/sec.txt"));
    locked.mode = 0600;
    ns.tree.insert(Path::require("/a/sec.txt"), locked);

    SimConfig cfg = tiny_cfg();
    WorkloadSpec spec;
    Simulation sim(cfg, spec, std::move(ns));
    sim.preload_exact({"/a", "/a/sec.txt"});
    sim.client(1).principal = Principal{2000, {2000}};

    Trace trace;
    trace.spec = spec;
    trace.n_clients = 2;
    trace.entries.push_back({1, openp("/a/sec.txt")});
    trace.entries.push_back({1, openp("/a/sec.txt")});

    uint64_t denied = 0, denied_in_switch = 0;
    sim.response_hook = [&](const Packet& resp, SimTime) {
        if (resp.status != Status::PermissionDenied) return;
        ++denied;
        if (resp.switch_hit && resp.origin_server < 0) ++denied_in_switch;
    };
    sim.load_trace(trace);
    sim.run();
    CHECK(denied == 2);
    CHECK(denied_in_switch == 1);
    CHECK(sim.dataplane().locks_all_zero());
    CHECK(sim.metrics().total_violations() == 0);
}

TEST_CASE("recirculation formula scenario") {
    auto res = check_recirculation_formulas();
    CHECK_MESSAGE(res.pass, res.detail);
}
