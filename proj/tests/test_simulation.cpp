#include <sstream>

#include "doctest.h"
#include "fletchsim/experiments.hpp"
#include "fletchsim/selfcheck.hpp"
#include "fletchsim/simulation.hpp"

using namespace fletchsim;

TEST_CASE("empty trace yields zero metrics") {
    SimConfig cfg;
    cfg.n_servers = 2;
    cfg.n_clients = 2;
    cfg.preload_files = 0;
    WorkloadSpec spec;
    spec.n_files = 100;
    Simulation sim(cfg, spec);
    Trace empty;
    empty.spec = spec;
    sim.load_trace(empty);
    Metrics m = sim.run();
    CHECK(m.issued == 0);
    CHECK(m.completed == 0);
    CHECK(m.throughput() == 0);
    CHECK(m.total_violations() == 0);
}

TEST_CASE("identical runs produce identical metrics") {
    auto spec = *WorkloadSpec::preset("training");
    spec.n_files = 3000;
    spec.seed = 77;
    SimConfig cfg;
    cfg.n_servers = 4;
    cfg.n_clients = 8;
    cfg.cache_capacity = 512;
    cfg.preload_files = 200;
    cfg.seed = 77;
    Trace trace = sample_trace(spec, cfg.n_clients, 20000);

    auto run_once = [&]() {
        Simulation sim(cfg, spec);
        sim.load_trace(trace);
        Metrics m = sim.run();
        std::ostringstream os;
        os << m.completed << ' ' << m.recirc_path << ' ' << m.recirc_lock
           << ' ' << m.recirc_cross << ' ' << m.mat_hits << ' '
           << m.served_from_switch << ' ' << m.admissions << ' '
           << m.evicted_paths << ' ' << m.hot_reports << ' '
           << m.last_completion;
        for (uint64_t n : m.per_server_ops) os << ' ' << n;
        return os.str();
    };
    CHECK(run_once() == run_once());
}

TEST_CASE("nocache forwards everything and never touches the cache") {
    auto spec = *WorkloadSpec::preset("thumb");
    spec.n_files = 2000;
    spec.seed = 3;
    SimConfig cfg;
    cfg.n_servers = 4;
    cfg.n_clients = 8;
    cfg.scheme = Scheme::NoCache;
    cfg.seed = 3;
    Simulation sim(cfg, spec);
    sim.load_trace(sample_trace(spec, cfg.n_clients, 5000));
    Metrics m = sim.run();
    CHECK(m.completed == 5000);
    CHECK(m.mat_hits == 0);
    CHECK(m.served_from_switch == 0);
    CHECK(m.recirc_cross == 0);
    CHECK(m.recirc_path == 0);
    CHECK(m.hot_reports == 0);
    CHECK(m.total_violations() == 0);
    CHECK(sim.dataplane().locks_all_zero());
}

TEST_CASE("conservation holds across a mixed run") {
    auto spec = *WorkloadSpec::preset("alibaba");
    spec.n_files = 3000;
    spec.seed = 8;
    SimConfig cfg;
    cfg.n_servers = 4;
    cfg.n_clients = 16;
    cfg.cache_capacity = 512;
    cfg.preload_files = 300;
    cfg.seed = 8;
    Simulation sim(cfg, spec);
    sim.load_trace(sample_trace(spec, cfg.n_clients, 30000));
    Metrics m = sim.run();
    CHECK(m.issued == 30000);
    CHECK(m.completed == 30000);
    CHECK(m.reads_completed + m.writes_completed == m.completed);
    CHECK(sim.audit_conservation());
    CHECK(sim.audit_write_through());
    CHECK(sim.audit_mirror());
    CHECK(sim.audit_lock_balance());
    CHECK(m.total_violations() == 0);
    // Per-server load covers every server.
    uint64_t sum = 0;
    for (uint64_t n : m.per_server_ops) sum += n;
    CHECK(sum > 0);
}

TEST_CASE("weak-hash collision correctness at unit scale") {
    auto res = check_collision_correctness(15000, 21);
    CHECK_MESSAGE(res.pass, res.detail);
}

TEST_CASE("lock balance under loss at unit scale") {
    auto res = check_lock_balance_adversity(15000, 0.3, 5);
    CHECK_MESSAGE(res.pass, res.detail);
}

TEST_CASE("event dump emits one line per traversal stage") {
    SimConfig cfg;
    cfg.n_servers = 2;
    cfg.n_clients = 1;
    cfg.preload_files = 0;
    cfg.dump_events = true;
    WorkloadSpec spec;
    spec.n_files = 50;
    spec.seed = 2;
    Simulation sim(cfg, spec);
    std::ostringstream sink;
    sim.set_event_sink(&sink);
    sim.load_trace(sample_trace(spec, 1, 20));
    sim.run();
    CHECK(sink.str().find("ingress") != std::string::npos);
}

TEST_CASE("experiment presets have the advertised shapes") {
    auto exp1 = experiment_preset("exp1", 1);
    REQUIRE(exp1.has_value());
    CHECK(exp1->size() == 16);  // 4 workloads x 2 schemes x 2 server counts

    auto exp3 = experiment_preset("exp3", 1);
    REQUIRE(exp3.has_value());
    CHECK(exp3->size() == 10);  // 5 ratios x 2 schemes

    auto exp7 = experiment_preset("exp7", 1);
    REQUIRE(exp7.has_value());
    std::set<uint32_t> depths;
    for (const auto& r : *exp7) depths.insert(r.workload.max_depth);
    CHECK(depths == std::set<uint32_t>{3, 5, 7, 9});

    auto exp8 = experiment_preset("exp8", 1);
    REQUIRE(exp8.has_value());
    for (const auto& r : *exp8) {
        CHECK(r.dynamic);
        CHECK(r.config.per_second_series);
        CHECK(r.workload.hot_in);
    }
    CHECK(!experiment_preset("nope", 1).has_value());
}
