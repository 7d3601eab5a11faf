// Command-line harness: trace generation, single simulations, the
// experiment matrices, and the invariant check battery.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "fletchsim/experiments.hpp"
#include "fletchsim/selfcheck.hpp"
#include "fletchsim/simulation.hpp"

using namespace fletchsim;

namespace {

struct WorkloadOptions {
    std::string preset = "training";
    std::string mix;  // "open:0.5,chmod:0.5" overrides the preset
    uint64_t n_files = 100000;
    uint32_t max_depth = 9;
    std::string skew = "powerlaw";
    double exponent = 0.9;
    bool no_eighty_twenty = false;
    std::string order = "random";
    bool hot_in = false;
    uint64_t hot_in_period_ms = 20000;
    uint32_t hot_in_k = 100;
};

void add_workload_flags(CLI::App* app, WorkloadOptions& w) {
    app->add_option("--workload", w.preset,
                    "preset: alibaba|training|thumb|linkedin");
    app->add_option("--mix", w.mix, "custom mix, e.g. open:0.75,chmod:0.25");
    app->add_option("--files", w.n_files, "namespace file count");
    app->add_option("--depth", w.max_depth, "maximum path depth");
    app->add_option("--skew", w.skew, "uniform|powerlaw");
    app->add_option("--exponent", w.exponent, "power-law exponent");
    app->add_flag("--no-8020", w.no_eighty_twenty, "disable the 80/20 rule");
    app->add_option("--order", w.order,
                    "frequency assignment order: random|hlf|llf");
    app->add_flag("--hot-in", w.hot_in, "periodic hot-in shifts");
    app->add_option("--hot-in-period-ms", w.hot_in_period_ms);
    app->add_option("--hot-in-k", w.hot_in_k);
}

bool build_workload(const WorkloadOptions& w, uint64_t seed,
                    WorkloadSpec& out) {
    if (!w.mix.empty()) {
        out = WorkloadSpec{};
        out.name = "custom";
        out.mix.clear();
        std::istringstream ms(w.mix);
        std::string part;
        while (std::getline(ms, part, ',')) {
            size_t colon = part.find(':');
            if (colon == std::string::npos) return false;
            auto kind = op_from_name(part.substr(0, colon));
            if (!kind) return false;
            out.mix.emplace_back(*kind, std::stod(part.substr(colon + 1)));
        }
        out.normalize_mix();
    } else {
        auto preset = WorkloadSpec::preset(w.preset);
        if (!preset) return false;
        out = *preset;
    }
    out.n_files = w.n_files;
    out.max_depth = w.max_depth;
    out.uniform = w.skew == "uniform";
    out.exponent = w.exponent;
    out.eighty_twenty = !w.no_eighty_twenty;
    out.order = w.order == "hlf"   ? WorkloadSpec::Order::Hlf
                : w.order == "llf" ? WorkloadSpec::Order::Llf
                                   : WorkloadSpec::Order::Random;
    out.hot_in = w.hot_in;
    out.hot_in_period = w.hot_in_period_ms * kMs;
    out.hot_in_k = w.hot_in_k;
    out.seed = seed;
    return true;
}

struct SimOptions {
    SimConfig cfg;
    std::string scheme = "fletch";
    std::string lock_mode = "multi";
    std::string hash = "md5";
    uint64_t duration_ms = 0;
    std::string config_file;
};

void add_sim_flags(CLI::App* app, SimOptions& s) {
    app->add_option("--servers", s.cfg.n_servers, "metadata server count");
    app->add_option("--clients", s.cfg.n_clients, "logical client count");
    app->add_option("--service-rate", s.cfg.service_rate,
                    "per-server ops/second");
    app->add_option("--scheme", s.scheme, "nocache|fletch");
    app->add_option("--lock-mode", s.lock_mode, "multi|single");
    app->add_option("--hash", s.hash, "md5|weak");
    app->add_option("--capacity", s.cfg.cache_capacity, "cache slots");
    app->add_option("--cms-threshold", s.cfg.cms_threshold);
    app->add_option("--preload", s.cfg.preload_files,
                    "hottest files preloaded into the cache");
    app->add_option("--loss-response", s.cfg.loss_server_response,
                    "loss on lock-related server responses");
    app->add_option("--loss-ack", s.cfg.loss_ack, "loss on switch acks");
    app->add_option("--duration-ms", s.duration_ms, "0 = run to completion");
    app->add_option("--seed", s.cfg.seed);
    app->add_option("--config", s.config_file,
                    "flat key-value config file (flag names as keys)");
    app->add_flag("--dump-events", s.cfg.dump_events,
                  "write the per-traversal packet trace to stderr");
    app->add_flag("!--no-fidelity", s.cfg.check_fidelity,
                  "disable the one-access-per-array checker");
    app->add_flag("!--no-soundness", s.cfg.check_soundness,
                  "disable the cache soundness checker");
}

// Flat "key value" or "key = value" lines; keys match the long flags
// without the leading dashes.
bool apply_config_file(const std::string& path, CLI::App* sub) {
    std::ifstream in(path);
    if (!in) return false;
    std::vector<std::string> args;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key, eq, value;
        if (!(ls >> key)) continue;
        if (!(ls >> eq)) return false;
        if (eq == "=") {
            if (!(ls >> value)) return false;
        } else {
            value = eq;
        }
        args.push_back("--" + key);
        args.push_back(value);
    }
    std::reverse(args.begin(), args.end());
    try {
        sub->parse(std::move(args));
    } catch (const CLI::ParseError&) {
        return false;
    }
    return true;
}

void finalize_sim_options(SimOptions& s) {
    s.cfg.scheme = s.scheme == "nocache" ? Scheme::NoCache : Scheme::Fletch;
    s.cfg.lock_mode =
        s.lock_mode == "single" ? LockMode::Single : LockMode::Multi;
    s.cfg.hash_mode =
        s.hash == "weak" ? HashMode::WeakDepth : HashMode::Md5;
    s.cfg.duration = s.duration_ms * kMs;
}

int report_metrics(Metrics& m, const std::string& label,
                   const std::string& csv_path) {
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        Metrics::write_csv_header(out);
        m.write_csv(out, label);
    }
    std::ostringstream os;
    Metrics::write_csv_header(os);
    m.write_csv(os, label);
    std::cout << os.str();
    if (!m.per_second_completed.empty()) {
        std::cout << "# per-second throughput:";
        for (uint64_t n : m.per_second_completed) std::cout << ' ' << n;
        std::cout << '\n';
    }
    if (m.total_violations() > 0) {
        std::cerr << "invariant violations detected:\n";
        for (const auto& [what, n] : m.violations)
            if (n) std::cerr << "  " << what << ": " << n << '\n';
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic in-switch metadata cache simulator"};
    app.require_subcommand(1);

    // gen: trace from a workload spec
    auto* gen = app.add_subcommand("gen", "generate a trace file");
    WorkloadOptions gen_wl;
    uint64_t gen_ops = 1000000;
    int gen_clients = 128;
    uint64_t gen_seed = 1;
    std::string gen_out = "trace.tsv";
    add_workload_flags(gen, gen_wl);
    gen->add_option("--ops", gen_ops, "operations to sample");
    gen->add_option("--clients", gen_clients);
    gen->add_option("--seed", gen_seed);
    gen->add_option("-o,--out", gen_out, "output trace path");

    // run: single simulation
    auto* run = app.add_subcommand("run", "run one simulation");
    WorkloadOptions run_wl;
    SimOptions run_sim;
    uint64_t run_ops = 300000;
    std::string run_trace_file;
    std::string run_csv;
    add_workload_flags(run, run_wl);
    add_sim_flags(run, run_sim);
    run->add_option("--ops", run_ops, "operations (ignored with --trace)");
    run->add_option("--trace", run_trace_file, "pre-generated trace file");
    run->add_option("--csv", run_csv, "write the metrics row to this file");

    // preset: experiment matrix
    auto* preset = app.add_subcommand("preset", "run an experiment matrix");
    std::string preset_name = "exp1";
    uint64_t preset_seed = 1;
    uint64_t preset_ops = 300000;
    std::string preset_csv = "matrix.csv";
    preset->add_option("name", preset_name, "exp1|exp3|exp5|exp6|exp7|exp8");
    preset->add_option("--seed", preset_seed);
    preset->add_option("--ops", preset_ops, "operations per run");
    preset->add_option("--csv", preset_csv, "matrix summary output");

    // check: invariant battery
    auto* check = app.add_subcommand("check", "run the invariant suites");
    uint64_t check_seed = 1;
    check->add_option("--seed", check_seed);

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        WorkloadSpec spec;
        if (!build_workload(gen_wl, gen_seed, spec)) {
            std::cerr << "bad workload spec\n";
            return 1;
        }
        Trace trace = sample_trace(spec, gen_clients, gen_ops);
        std::ofstream out(gen_out);
        trace.write(out);
        std::cout << "wrote " << trace.entries.size() << " ops to " << gen_out
                  << '\n';
        return 0;
    }

    if (run->parsed()) {
        if (!run_sim.config_file.empty() &&
            !apply_config_file(run_sim.config_file, run)) {
            std::cerr << "bad config file\n";
            return 1;
        }
        finalize_sim_options(run_sim);
        WorkloadSpec spec;
        Trace trace;
        if (!run_trace_file.empty()) {
            std::ifstream in(run_trace_file);
            auto parsed = Trace::read(in);
            if (!parsed) {
                std::cerr << "bad trace file\n";
                return 1;
            }
            trace = std::move(*parsed);
            spec = trace.spec;
            run_sim.cfg.n_clients = trace.n_clients;
        } else {
            if (!build_workload(run_wl, run_sim.cfg.seed, spec)) {
                std::cerr << "bad workload spec\n";
                return 1;
            }
        }
        run_sim.cfg.per_second_series = spec.hot_in;
        Simulation sim(run_sim.cfg, spec);
        if (run_sim.cfg.dump_events) sim.set_event_sink(&std::cerr);
        if (spec.hot_in) {
            sim.use_dynamic_workload(run_ops);
        } else if (!run_trace_file.empty()) {
            sim.load_trace(trace);
        } else {
            sim.load_trace(sample_trace(spec, run_sim.cfg.n_clients, run_ops));
        }
        Metrics m = sim.run();
        sim.audit_write_through();
        sim.audit_lock_balance();
        sim.audit_mirror();
        sim.audit_conservation();
        return report_metrics(m, spec.name, run_csv);
    }

    if (preset->parsed()) {
        auto runs = experiment_preset(preset_name, preset_seed);
        if (!runs) {
            std::cerr << "unknown preset " << preset_name << '\n';
            return 1;
        }
        std::ofstream out(preset_csv);
        Metrics::write_csv_header(out);
        Metrics::write_csv_header(std::cout);
        int rc = 0;
        for (auto& r : *runs) {
            if (!r.dynamic) r.trace_ops = preset_ops;
            Metrics m = execute_run(r);
            m.write_csv(out, r.label);
            m.write_csv(std::cout, r.label);
            if (m.total_violations() > 0) rc = 2;
        }
        std::cout << "matrix written to " << preset_csv << '\n';
        return rc;
    }

    if (check->parsed()) {
        int failures = 0;
        for (const auto& res : run_quick_checks(check_seed)) {
            std::printf("%-26s %s  %s\n", res.name.c_str(),
                        res.pass ? "PASS" : "FAIL", res.detail.c_str());
            if (!res.pass) ++failures;
        }
        return failures;
    }
    return 0;
}
