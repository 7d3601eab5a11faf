#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fletchsim/workload.hpp"

using namespace fletchsim;

namespace {

bool destructive(OpKind k) {
    return k == OpKind::Delete || k == OpKind::Rename || k == OpKind::Rmdir;
}

}  // namespace

TEST_CASE("namespace construction") {
    WorkloadSpec spec;
    spec.n_files = 8;
    spec.max_depth = 3;
    BuiltNamespace ns = build_namespace(spec);
    CHECK(ns.files.size() == 8);
    for (const Path& f : ns.files) CHECK(f.depth() <= 3);
    CHECK(ns.tree.find(Path::require("/mkrm")) != nullptr);

    WorkloadSpec big;
    big.n_files = 20000;
    big.max_depth = 9;
    BuiltNamespace bs = build_namespace(big);
    CHECK(bs.files.size() == 20000);
    size_t shallow = 0;
    for (const Path& f : bs.files) {
        CHECK(f.depth() <= 9);
        if (f.depth() <= 9) ++shallow;
    }
    CHECK(shallow == bs.files.size());
}

TEST_CASE("power-law weights follow the rank formula") {
    WorkloadSpec spec;
    spec.n_files = 100;
    spec.exponent = 0.9;
    spec.eighty_twenty = false;
    spec.order = WorkloadSpec::Order::Hlf;  // deterministic order
    BuiltNamespace ns = build_namespace(spec);
    WorkloadSampler sampler(spec, ns);
    const auto& w = sampler.rank_weights();
    REQUIRE(w.size() == 100);
    CHECK(w[0] / w[1] == doctest::Approx(std::pow(2.0, 0.9)).epsilon(1e-9));
    for (size_t i = 1; i < w.size(); ++i) CHECK(w[i - 1] >= w[i]);
}

TEST_CASE("uniform skew gives equal weights") {
    WorkloadSpec spec;
    spec.n_files = 50;
    spec.uniform = true;
    spec.eighty_twenty = false;
    BuiltNamespace ns = build_namespace(spec);
    auto weights = assign_frequencies(ns.files, spec);
    for (double w : weights) CHECK(w == doctest::Approx(1.0 / 50).epsilon(1e-12));
}

TEST_CASE("eighty-twenty mass split verified by sampling") {
    WorkloadSpec spec;
    spec.n_files = 5000;
    spec.exponent = 0.9;
    spec.eighty_twenty = true;
    spec.seed = 11;
    spec.mix = {{OpKind::Open, 1.0}};
    BuiltNamespace ns = build_namespace(spec);
    WorkloadSampler sampler(spec, ns);

    // Top 20% of ranks carry 80% of the weight, so sampled ops hit the
    // top fifth of files 80% of the time.
    const auto& w = sampler.rank_weights();
    double top = 0, total = 0;
    for (size_t r = 0; r < w.size(); ++r) {
        total += w[r];
        if (r < w.size() / 5) top += w[r];
    }
    CHECK(top / total == doctest::Approx(0.8).epsilon(1e-9));

    Rng rng(spec.seed);
    uint64_t hot_hits = 0;
    const uint64_t n = 1000000;
    std::set<std::string> hot;
    for (const Path& f : sampler.hottest_files(spec.n_files / 5))
        hot.insert(f.str());
    for (uint64_t i = 0; i < n; ++i) {
        MetaOp op = sampler.sample(rng);
        if (hot.count(op.target.str())) ++hot_hits;
    }
    double frac = static_cast<double>(hot_hits) / n;
    CHECK(frac > 0.79);
    CHECK(frac < 0.81);
}

TEST_CASE("trace op mix matches the preset within half a percent") {
    // The namespace must absorb the destructive draws (each delete and
    // rename target is used once), so files scale with the trace.
    auto spec = WorkloadSpec::preset("alibaba");
    REQUIRE(spec.has_value());
    spec->n_files = 300000;
    spec->seed = 5;
    Trace t = sample_trace(*spec, 64, 1000000);
    REQUIRE(t.entries.size() == 1000000);

    std::map<OpKind, uint64_t> counts;
    for (const auto& e : t.entries) counts[e.op.kind] += 1;
    double oc = static_cast<double>(counts[OpKind::Open] +
                                    counts[OpKind::Close]) /
                t.entries.size();
    CHECK(oc == doctest::Approx(0.526).epsilon(0.01));
    CHECK(std::abs(oc - 0.526) < 0.005);

    auto thumb = WorkloadSpec::preset("thumb");
    REQUIRE(thumb.has_value());
    thumb->n_files = 20000;
    thumb->seed = 6;
    Trace tt = sample_trace(*thumb, 64, 1000000);
    uint64_t reads = 0;
    for (const auto& e : tt.entries)
        if (op_is_read(e.op.kind)) ++reads;
    double rr = static_cast<double>(reads) / tt.entries.size();
    CHECK(std::abs(rr - 0.857) < 0.005);

    WorkloadSpec empty = *spec;
    Trace zero = sample_trace(empty, 8, 0);
    CHECK(zero.entries.empty());
}

TEST_CASE("destructive operations sit at the trace tail") {
    auto spec = WorkloadSpec::preset("alibaba");
    spec->n_files = 2000;
    spec->seed = 9;
    Trace t = sample_trace(*spec, 16, 20000);
    bool in_tail = false;
    for (const auto& e : t.entries) {
        if (destructive(e.op.kind)) {
            in_tail = true;
        } else {
            CHECK(!in_tail);  // no non-destructive op after the first destructive
        }
    }
    CHECK(in_tail);
}

TEST_CASE("delete and rename targets are never reused") {
    auto spec = WorkloadSpec::preset("alibaba");
    spec->n_files = 500;
    spec->seed = 10;
    Trace t = sample_trace(*spec, 8, 20000);
    std::set<std::string> destroyed;
    for (const auto& e : t.entries) {
        if (e.op.kind == OpKind::Delete || e.op.kind == OpKind::Rename) {
            CHECK(destroyed.insert(e.op.target.str()).second);
        }
    }
}

TEST_CASE("trace generation is byte-identical across runs") {
    auto spec = WorkloadSpec::preset("training");
    spec->n_files = 3000;
    spec->seed = 31337;
    Trace a = sample_trace(*spec, 32, 50000);
    Trace b = sample_trace(*spec, 32, 50000);
    std::ostringstream sa, sb;
    a.write(sa);
    b.write(sb);
    CHECK(sa.str() == sb.str());

    spec->seed = 31338;
    Trace c = sample_trace(*spec, 32, 50000);
    std::ostringstream sc;
    c.write(sc);
    CHECK(sa.str() != sc.str());
}

TEST_CASE("trace file round trip") {
    auto spec = WorkloadSpec::preset("linkedin");
    spec->n_files = 1000;
    spec->seed = 4;
    Trace t = sample_trace(*spec, 8, 5000);
    std::stringstream ss;
    t.write(ss);
    auto back = Trace::read(ss);
    REQUIRE(back.has_value());
    REQUIRE(back->entries.size() == t.entries.size());
    CHECK(back->n_clients == t.n_clients);
    CHECK(back->spec.name == t.spec.name);
    for (size_t i = 0; i < t.entries.size(); ++i) {
        CHECK(back->entries[i].client == t.entries[i].client);
        CHECK(back->entries[i].op.kind == t.entries[i].op.kind);
        CHECK(back->entries[i].op.target == t.entries[i].op.target);
    }
    std::ostringstream again;
    back->write(again);
    CHECK(again.str() == ss.str());
}

TEST_CASE("hot-in shift is a rank rotation") {
    WorkloadSpec spec;
    spec.n_files = 1000;
    spec.hot_in_k = 100;
    spec.eighty_twenty = false;
    BuiltNamespace ns = build_namespace(spec);
    WorkloadSampler sampler(spec, ns);

    auto before = sampler.rank_order();
    std::vector<uint32_t> old_bottom(before.end() - 100, before.end());
    sampler.hot_in_shift();
    auto after = sampler.rank_order();
    std::vector<uint32_t> new_top(after.begin(), after.begin() + 100);
    CHECK(old_bottom == new_top);  // coldest 100 become the hottest 100
    for (size_t i = 0; i < before.size() - 100; ++i)
        CHECK(after[i + 100] == before[i]);

    // k = n: a full rotation returns the original order.
    WorkloadSpec full = spec;
    full.n_files = 64;
    full.hot_in_k = 64;
    BuiltNamespace ns2 = build_namespace(full);
    WorkloadSampler s2(full, ns2);
    auto orig = s2.rank_order();
    s2.hot_in_shift();
    CHECK(s2.rank_order() == orig);

    // k = 0 is the identity.
    WorkloadSpec none = spec;
    none.hot_in_k = 0;
    WorkloadSampler s3(none, ns);
    auto o3 = s3.rank_order();
    s3.hot_in_shift();
    CHECK(s3.rank_order() == o3);
}

TEST_CASE("preset mixes normalize to one") {
    for (const auto& name : WorkloadSpec::preset_names()) {
        auto spec = WorkloadSpec::preset(name);
        REQUIRE(spec.has_value());
        double sum = 0;
        for (const auto& [k, r] : spec->mix) sum += r;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(!WorkloadSpec::preset("nope").has_value());
}

TEST_CASE("spec echo round trip") {
    auto spec = WorkloadSpec::preset("training");
    spec->n_files = 777;
    spec->max_depth = 5;
    spec->uniform = false;
    spec->exponent = 1.0;
    spec->order = WorkloadSpec::Order::Llf;
    spec->hot_in = true;
    spec->hot_in_period = 20 * kSec;
    spec->hot_in_k = 50;
    spec->seed = 123;
    auto back = WorkloadSpec::parse_echo(spec->echo());
    REQUIRE(back.has_value());
    CHECK(back->n_files == 777);
    CHECK(back->max_depth == 5);
    CHECK(back->exponent == 1.0);
    CHECK(back->order == WorkloadSpec::Order::Llf);
    CHECK(back->hot_in);
    CHECK(back->hot_in_period == 20 * kSec);
    CHECK(back->hot_in_k == 50);
    CHECK(back->seed == 123);
    CHECK(back->mix.size() == spec->mix.size());
}
