#include "fletchsim/experiments.hpp"

#include "fletchsim/simulation.hpp"

namespace fletchsim {

namespace {

const char* scheme_tag(Scheme s) {
    return s == Scheme::Fletch ? "fletch" : "nocache";
}

SimConfig base_config(uint64_t seed) {
    SimConfig cfg;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

WorkloadSpec chmod_ratio_workload(double chmod_ratio, uint64_t seed) {
    WorkloadSpec w;
    w.name = "openchmod";
    w.mix = {{OpKind::Open, 1.0 - chmod_ratio}, {OpKind::Chmod, chmod_ratio}};
    w.normalize_mix();
    w.eighty_twenty = false;  // pure power-law per-op draw
    w.exponent = 0.9;
    w.seed = seed;
    return w;
}

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {"exp1", "exp3", "exp5",
                                                   "exp6", "exp7", "exp8"};
    return names;
}

std::optional<std::vector<ExperimentRun>> experiment_preset(
    const std::string& name, uint64_t seed) {
    std::vector<ExperimentRun> runs;

    if (name == "exp1") {
        for (const auto& wl : WorkloadSpec::preset_names()) {
            for (int servers : {4, 16}) {
                for (Scheme scheme : {Scheme::NoCache, Scheme::Fletch}) {
                    ExperimentRun r;
                    r.workload = *WorkloadSpec::preset(wl);
                    r.workload.seed = seed;
                    r.config = base_config(seed);
                    r.config.n_servers = servers;
                    r.config.scheme = scheme;
                    r.label = name + "," + wl + "," + std::to_string(servers) +
                              "," + scheme_tag(scheme);
                    runs.push_back(std::move(r));
                }
            }
        }
    } else if (name == "exp3") {
        for (int pct : {0, 25, 50, 75, 100}) {
            for (Scheme scheme : {Scheme::NoCache, Scheme::Fletch}) {
                ExperimentRun r;
                r.workload = chmod_ratio_workload(pct / 100.0, seed);
                r.config = base_config(seed);
                r.config.scheme = scheme;
                r.label = name + ",chmod" + std::to_string(pct) + "," +
                          scheme_tag(scheme);
                runs.push_back(std::move(r));
            }
        }
    } else if (name == "exp5") {
        for (auto order : {WorkloadSpec::Order::Hlf, WorkloadSpec::Order::Llf,
                           WorkloadSpec::Order::Random}) {
            for (Scheme scheme : {Scheme::NoCache, Scheme::Fletch}) {
                ExperimentRun r;
                r.workload = *WorkloadSpec::preset("training");
                r.workload.order = order;
                r.workload.seed = seed;
                r.config = base_config(seed);
                r.config.scheme = scheme;
                const char* tag = order == WorkloadSpec::Order::Hlf ? "hlf"
                                  : order == WorkloadSpec::Order::Llf
                                      ? "llf"
                                      : "random";
                r.label = name + "," + tag + "," + scheme_tag(scheme);
                runs.push_back(std::move(r));
            }
        }
    } else if (name == "exp6") {
        struct Skew {
            const char* tag;
            bool uniform;
            double exponent;
        };
        for (const Skew& s : {Skew{"uniform", true, 0.0},
                              Skew{"p08", false, 0.8}, Skew{"p09", false, 0.9},
                              Skew{"p10", false, 1.0}}) {
            for (Scheme scheme : {Scheme::NoCache, Scheme::Fletch}) {
                ExperimentRun r;
                r.workload = *WorkloadSpec::preset("training");
                r.workload.uniform = s.uniform;
                r.workload.exponent = s.exponent;
                r.workload.seed = seed;
                r.config = base_config(seed);
                r.config.scheme = scheme;
                r.label = std::string(name) + "," + s.tag + "," +
                          scheme_tag(scheme);
                runs.push_back(std::move(r));
            }
        }
    } else if (name == "exp7") {
        for (uint32_t depth : {3u, 5u, 7u, 9u}) {
            for (Scheme scheme : {Scheme::NoCache, Scheme::Fletch}) {
                ExperimentRun r;
                r.workload = *WorkloadSpec::preset("training");
                r.workload.max_depth = depth;
                r.workload.seed = seed;
                r.config = base_config(seed);
                r.config.scheme = scheme;
                r.label = name + ",depth" + std::to_string(depth) + "," +
                          scheme_tag(scheme);
                runs.push_back(std::move(r));
            }
        }
    } else if (name == "exp8") {
        for (const auto& wl : WorkloadSpec::preset_names()) {
            ExperimentRun r;
            r.workload = *WorkloadSpec::preset(wl);
            r.workload.seed = seed;
            r.workload.hot_in = true;
            r.workload.hot_in_period = 20 * kSec;
            r.workload.hot_in_k = 100;
            r.workload.n_files = 20000;
            r.config = base_config(seed);
            r.config.scheme = Scheme::Fletch;
            r.config.n_servers = 4;
            r.config.n_clients = 16;
            r.config.service_rate = 2000;
            r.config.preload_files = 2000;
            r.config.cache_capacity = 4096;
            r.config.duration = 200 * kSec;
            r.config.per_second_series = true;
            r.dynamic = true;
            r.trace_ops = ~uint64_t{0};
            r.label = name + "," + wl + ",fletch";
            runs.push_back(std::move(r));
        }
    } else {
        return std::nullopt;
    }
    return runs;
}

Metrics execute_run(const ExperimentRun& run) {
    Simulation sim(run.config, run.workload);
    if (run.dynamic) {
        sim.use_dynamic_workload(run.trace_ops);
    } else {
        Trace trace =
            sample_trace(run.workload, run.config.n_clients, run.trace_ops);
        sim.load_trace(trace);
    }
    return sim.run();
}

}  // namespace fletchsim
