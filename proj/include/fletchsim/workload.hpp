#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "fletchsim/namespace_tree.hpp"
#include "fletchsim/rng.hpp"
#include "fletchsim/sim_time.hpp"

namespace fletchsim {

struct WorkloadSpec {
    enum class Order { Random, Hlf, Llf };

    std::string name = "custom";
    std::vector<std::pair<OpKind, double>> mix = {{OpKind::Open, 1.0}};
    uint64_t n_files = 100000;
    uint32_t max_depth = 9;
    bool uniform = false;  // else power-law over file ranks
    double exponent = 0.9;
    bool eighty_twenty = true;
    Order order = Order::Random;
    bool hot_in = false;
    SimTime hot_in_period = 20 * kSec;
    uint32_t hot_in_k = 100;
    uint64_t seed = 1;

    // Table I op mixes (plus the adjusted LinkedIn ratios), normalized.
    static std::optional<WorkloadSpec> preset(const std::string& name);
    static const std::vector<std::string>& preset_names();

    void normalize_mix();
    double mix_ratio(OpKind k) const;
    double read_ratio() const;

    std::string echo() const;
    static std::optional<WorkloadSpec> parse_echo(const std::string& echo);
};

struct BuiltNamespace {
    NamespaceTree tree;
    std::vector<Path> files;        // sampled population
    std::vector<Path> rmdir_pool;   // pre-created empty directories
    Path mkdir_area;
    uint32_t fanout = 0;
};

// Balanced mdtest-style tree: directories to depth max_depth-1, empty
// files spread round-robin over every directory, plus reserved subtrees
// for mkdir/rmdir targets. Deterministic for a given spec.
BuiltNamespace build_namespace(const WorkloadSpec& spec);

// Descending rank weights zipped onto the ordered file list, with the
// 80/20 mass split applied on top. Deterministic for (spec, seed).
std::vector<double> assign_frequencies(const std::vector<Path>& files,
                                       const WorkloadSpec& spec);

// Draws operations per the spec: files by weight, op kinds by mix,
// statdir/readdir on the drawn file's parent, mkdir/rmdir confined to
// the reserved subtrees, delete/rename targets never reused.
class WorkloadSampler {
  public:
    WorkloadSampler(const WorkloadSpec& spec, const BuiltNamespace& ns);

    MetaOp sample(Rng& rng);

    // Promotes the k coldest files to the hottest ranks (rank rotation).
    void hot_in_shift();

    // Rank r (0 = hottest) -> file index; exposed for tests.
    const std::vector<uint32_t>& rank_order() const { return ranked_; }
    const std::vector<double>& rank_weights() const { return rank_weights_; }
    double weight_of_file(size_t file_idx) const;
    std::vector<Path> hottest_files(size_t n) const;

  private:
    size_t draw_rank(Rng& rng) const;
    OpKind draw_op(Rng& rng) const;

    const WorkloadSpec& spec_;
    const BuiltNamespace& ns_;
    std::vector<uint32_t> ranked_;        // rank -> file index
    std::vector<double> rank_weights_;    // by rank, descending
    std::vector<double> rank_cum_;
    std::vector<std::pair<OpKind, double>> mix_cum_;
    std::set<size_t> destroyed_;          // delete/rename dedup
    uint64_t create_counter_ = 0;
    uint64_t mkdir_counter_ = 0;
    uint64_t rmdir_counter_ = 0;
};

struct TraceEntry {
    int client = 0;
    MetaOp op;
};

struct Trace {
    WorkloadSpec spec;
    int n_clients = 128;
    std::vector<TraceEntry> entries;

    void write(std::ostream& out) const;
    static std::optional<Trace> read(std::istream& in);
};

// Samples a length-op trace; rename/delete/rmdir are deferred to the
// tail of the sequence, then entries are dealt round-robin to clients.
Trace sample_trace(const WorkloadSpec& spec, int n_clients, uint64_t length);

std::string format_meta_op(const MetaOp& op);

}  // namespace fletchsim
