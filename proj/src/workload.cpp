#include "fletchsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fletchsim {

namespace {

bool op_is_destructive(OpKind k) {
    return k == OpKind::Delete || k == OpKind::Rename || k == OpKind::Rmdir;
}

}  // namespace

void WorkloadSpec::normalize_mix() {
    double sum = 0;
    for (const auto& [k, r] : mix) sum += r;
    if (sum <= 0) return;
    for (auto& [k, r] : mix) r /= sum;
}

double WorkloadSpec::mix_ratio(OpKind k) const {
    for (const auto& [mk, r] : mix)
        if (mk == k) return r;
    return 0;
}

double WorkloadSpec::read_ratio() const {
    double r = 0;
    for (const auto& [k, ratio] : mix)
        if (op_is_read(k)) r += ratio;
    return r;
}

const std::vector<std::string>& WorkloadSpec::preset_names() {
    static const std::vector<std::string> names = {"alibaba", "training",
                                                   "thumb", "linkedin"};
    return names;
}

std::optional<WorkloadSpec> WorkloadSpec::preset(const std::string& name) {
    WorkloadSpec s;
    s.name = name;
    if (name == "alibaba") {
        s.mix = {{OpKind::Open, 0.263},    {OpKind::Close, 0.263},
                 {OpKind::Create, 0.0959}, {OpKind::Readdir, 0.039},
                 {OpKind::Chmod, 0.001},   {OpKind::Delete, 0.119},
                 {OpKind::Stat, 0.124},    {OpKind::Statdir, 0.002},
                 {OpKind::Mkdir, 0.00005}, {OpKind::Rmdir, 0.00005},
                 {OpKind::Rename, 0.093}};
    } else if (name == "training") {
        // These ratios total 101.36% as recorded; normalize_mix rescales.
        s.mix = {{OpKind::Open, 0.2716},   {OpKind::Close, 0.2716},
                 {OpKind::Stat, 0.285},    {OpKind::Readdir, 0.0013},
                 {OpKind::Create, 0.0901}, {OpKind::Mkdir, 0.0013},
                 {OpKind::Rmdir, 0.0013},  {OpKind::Delete, 0.0901},
                 {OpKind::Statdir, 0.0013}};
    } else if (name == "thumb") {
        s.mix = {{OpKind::Open, 0.28505},  {OpKind::Close, 0.28505},
                 {OpKind::Stat, 0.2844},   {OpKind::Readdir, 0.0013},
                 {OpKind::Create, 0.1416}, {OpKind::Mkdir, 0.0013},
                 {OpKind::Statdir, 0.0013}};
    } else if (name == "linkedin") {
        s.mix = {{OpKind::Open, 0.42},   {OpKind::Stat, 0.42},
                 {OpKind::Create, 0.045}, {OpKind::Mkdir, 0.045},
                 {OpKind::Chmod, 0.01},  {OpKind::Delete, 0.03},
                 {OpKind::Rename, 0.03}};
    } else {
        return std::nullopt;
    }
    s.normalize_mix();
    return s;
}

std::string WorkloadSpec::echo() const {
    std::ostringstream os;
    os << "name=" << name << " files=" << n_files << " depth=" << max_depth
       << " skew=" << (uniform ? "uniform" : "powerlaw")
       << " exp=" << exponent << " e80=" << (eighty_twenty ? 1 : 0)
       << " order="
       << (order == Order::Random ? "random"
                                  : (order == Order::Hlf ? "hlf" : "llf"))
       << " hotin=" << (hot_in ? 1 : 0) << " hotin_period_ms="
       << hot_in_period / kMs << " hotin_k=" << hot_in_k << " seed=" << seed
       << " mix=";
    for (size_t i = 0; i < mix.size(); ++i) {
        if (i) os << ',';
        os << op_name(mix[i].first) << ':' << mix[i].second;
    }
    return os.str();
}

std::optional<WorkloadSpec> WorkloadSpec::parse_echo(const std::string& echo) {
    WorkloadSpec s;
    s.mix.clear();
    std::istringstream is(echo);
    std::string tok;
    while (is >> tok) {
        size_t eq = tok.find('=');
        if (eq == std::string::npos) return std::nullopt;
        std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "name") s.name = val;
        else if (key == "files") s.n_files = std::stoull(val);
        else if (key == "depth") s.max_depth = std::stoul(val);
        else if (key == "skew") s.uniform = val == "uniform";
        else if (key == "exp") s.exponent = std::stod(val);
        else if (key == "e80") s.eighty_twenty = val == "1";
        else if (key == "order")
            s.order = val == "hlf" ? Order::Hlf
                      : val == "llf" ? Order::Llf
                                     : Order::Random;
        else if (key == "hotin") s.hot_in = val == "1";
        else if (key == "hotin_period_ms") s.hot_in_period = std::stoull(val) * kMs;
        else if (key == "hotin_k") s.hot_in_k = std::stoul(val);
        else if (key == "seed") s.seed = std::stoull(val);
        else if (key == "mix") {
            std::istringstream ms(val);
            std::string part;
            while (std::getline(ms, part, ',')) {
                size_t colon = part.find(':');
                if (colon == std::string::npos) return std::nullopt;
                auto k = op_from_name(part.substr(0, colon));
                if (!k) return std::nullopt;
                s.mix.emplace_back(*k, std::stod(part.substr(colon + 1)));
            }
        } else {
            return std::nullopt;
        }
    }
    if (s.mix.empty()) return std::nullopt;
    return s;
}

BuiltNamespace build_namespace(const WorkloadSpec& spec) {
    BuiltNamespace out;
    // mdtest style: one top-level tree directory holds everything, then
    // a balanced fanout down to depth max_depth-1, files at every level.
    uint32_t levels = spec.max_depth > 2 ? spec.max_depth - 2 : 0;

    // Fanout sized so directories hold a handful of files each.
    auto total_dirs = [&](uint64_t f) {
        uint64_t n = 1, layer = 1;
        for (uint32_t k = 0; k < levels; ++k) {
            layer *= f;
            n += layer;
            if (n > spec.n_files) break;
        }
        return n;
    };
    uint64_t fanout = 2;
    while (fanout < 64 && total_dirs(fanout) < spec.n_files / 16 + 1)
        ++fanout;
    out.fanout = static_cast<uint32_t>(fanout);

    MetadataRecord dir_rec;
    dir_rec.kind = NodeKind::Directory;
    dir_rec.mode = 0755;
    dir_rec.owner_id = 1000;
    dir_rec.group_id = 1000;
    dir_rec.size = 0;
    dir_rec.replication = 0;

    Path base = Path::require("/mdt");
    out.tree.insert(base, dir_rec);
    std::vector<Path> dirs = {base};
    std::vector<Path> frontier = {base};
    for (uint32_t lvl = 0; lvl < levels; ++lvl) {
        std::vector<Path> next;
        for (const Path& parent : frontier) {
            for (uint64_t c = 0; c < fanout; ++c) {
                Path d = parent.child("d" + std::to_string(c));
                out.tree.insert(d, dir_rec);
                dirs.push_back(d);
                next.push_back(d);
            }
        }
        frontier = std::move(next);
        if (dirs.size() > spec.n_files + 1) break;
    }

    MetadataRecord file_rec;
    file_rec.kind = NodeKind::File;
    file_rec.mode = 0644;
    file_rec.owner_id = 1000;
    file_rec.group_id = 1000;
    file_rec.replication = 3;

    out.files.reserve(spec.n_files);
    for (uint64_t i = 0; i < spec.n_files; ++i) {
        const Path& dir = dirs[i % dirs.size()];
        Path f = dir.child("f" + std::to_string(i) + ".dat");
        out.tree.insert(f, file_rec);
        out.files.push_back(f);
    }

    // Reserved subtrees keep mkdir/rmdir away from populated dirs.
    out.mkdir_area = Path::require("/mkrm");
    out.tree.insert(out.mkdir_area, dir_rec);
    size_t pool = spec.n_files >= 10000 ? 4096 : 256;
    out.rmdir_pool.reserve(pool);
    for (size_t i = 0; i < pool; ++i) {
        Path d = out.mkdir_area.child("pre" + std::to_string(i));
        out.tree.insert(d, dir_rec);
        out.rmdir_pool.push_back(d);
    }
    return out;
}

std::vector<double> assign_frequencies(const std::vector<Path>& files,
                                       const WorkloadSpec& spec) {
    size_t n = files.size();
    std::vector<double> rank_weights(n);
    if (spec.uniform) {
        std::fill(rank_weights.begin(), rank_weights.end(), 1.0 / n);
    } else {
        double sum = 0;
        for (size_t i = 0; i < n; ++i) {
            rank_weights[i] = std::pow(static_cast<double>(i + 1),
                                       -spec.exponent);
            sum += rank_weights[i];
        }
        for (double& w : rank_weights) w /= sum;
    }
    if (spec.eighty_twenty && n >= 5) {
        size_t top = n / 5;
        double top_sum = 0, rest_sum = 0;
        for (size_t i = 0; i < n; ++i)
            (i < top ? top_sum : rest_sum) += rank_weights[i];
        for (size_t i = 0; i < n; ++i) {
            rank_weights[i] *= i < top ? 0.8 / top_sum : 0.2 / rest_sum;
        }
    }

    // Order files, then zip: the i-th weight goes to the i-th file.
    std::vector<uint32_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = static_cast<uint32_t>(i);
    if (spec.order == WorkloadSpec::Order::Hlf) {
        std::stable_sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
            return files[a].depth() > files[b].depth();
        });
    } else if (spec.order == WorkloadSpec::Order::Llf) {
        std::stable_sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
            return files[a].depth() < files[b].depth();
        });
    } else {
        Rng rng(spec.seed ^ 0x5eedf11e5ULL);
        rng.shuffle(order);
    }

    std::vector<double> weights(n);
    for (size_t i = 0; i < n; ++i) weights[order[i]] = rank_weights[i];
    return weights;
}

WorkloadSampler::WorkloadSampler(const WorkloadSpec& spec,
                                 const BuiltNamespace& ns)
    : spec_(spec), ns_(ns) {
    size_t n = ns.files.size();
    std::vector<double> weights = assign_frequencies(ns.files, spec);

    // rank -> file, hottest first.
    ranked_.resize(n);
    for (size_t i = 0; i < n; ++i) ranked_[i] = static_cast<uint32_t>(i);
    std::stable_sort(ranked_.begin(), ranked_.end(),
                     [&](uint32_t a, uint32_t b) {
                         return weights[a] > weights[b];
                     });
    rank_weights_.resize(n);
    for (size_t r = 0; r < n; ++r) rank_weights_[r] = weights[ranked_[r]];

    rank_cum_.resize(n);
    double acc = 0;
    for (size_t r = 0; r < n; ++r) {
        acc += rank_weights_[r];
        rank_cum_[r] = acc;
    }

    double mix_acc = 0;
    for (const auto& [k, ratio] : spec.mix) {
        mix_acc += ratio;
        mix_cum_.emplace_back(k, mix_acc);
    }
}

double WorkloadSampler::weight_of_file(size_t file_idx) const {
    for (size_t r = 0; r < ranked_.size(); ++r)
        if (ranked_[r] == file_idx) return rank_weights_[r];
    return 0;
}

std::vector<Path> WorkloadSampler::hottest_files(size_t n) const {
    std::vector<Path> out;
    for (size_t r = 0; r < ranked_.size() && out.size() < n; ++r)
        out.push_back(ns_.files[ranked_[r]]);
    return out;
}

size_t WorkloadSampler::draw_rank(Rng& rng) const {
    double u = rng.next_double() * rank_cum_.back();
    auto it = std::lower_bound(rank_cum_.begin(), rank_cum_.end(), u);
    return static_cast<size_t>(it - rank_cum_.begin());
}

OpKind WorkloadSampler::draw_op(Rng& rng) const {
    double u = rng.next_double() * mix_cum_.back().second;
    for (const auto& [k, cum] : mix_cum_)
        if (u <= cum) return k;
    return mix_cum_.back().first;
}

MetaOp WorkloadSampler::sample(Rng& rng) {
    OpKind kind = draw_op(rng);
    MetaOp op;
    op.kind = kind;

    if (kind == OpKind::Mkdir) {
        op.target = ns_.mkdir_area.child("m" + std::to_string(mkdir_counter_++));
        op.new_mode = 0755;
        return op;
    }
    if (kind == OpKind::Rmdir) {
        // Pre-created pool first; it exists from the start of the run.
        if (rmdir_counter_ < ns_.rmdir_pool.size()) {
            op.target = ns_.rmdir_pool[rmdir_counter_++];
        } else if (mkdir_counter_ > 0 &&
                   rmdir_counter_ - ns_.rmdir_pool.size() < mkdir_counter_) {
            uint64_t i = rmdir_counter_++ - ns_.rmdir_pool.size();
            op.target = ns_.mkdir_area.child("m" + std::to_string(i));
        } else {
            op.kind = OpKind::Mkdir;
            op.target =
                ns_.mkdir_area.child("m" + std::to_string(mkdir_counter_++));
            op.new_mode = 0755;
        }
        return op;
    }

    size_t file_idx = ranked_[draw_rank(rng)];
    if (kind == OpKind::Delete || kind == OpKind::Rename) {
        for (int tries = 0; destroyed_.count(file_idx) && tries < 64; ++tries)
            file_idx = ranked_[draw_rank(rng)];
        if (destroyed_.count(file_idx)) {
            op.kind = OpKind::Open;
            op.target = ns_.files[file_idx];
            return op;
        }
        destroyed_.insert(file_idx);
    }
    const Path& f = ns_.files[file_idx];

    switch (kind) {
        case OpKind::Statdir:
        case OpKind::Readdir:
            op.target = f.parent();
            break;
        case OpKind::Create:
            op.target = f.parent().child(
                "c" + std::to_string(create_counter_++) + ".dat");
            op.new_mode = 0644;
            break;
        case OpKind::Rename:
            op.target = f;
            op.rename_to = f.parent().child(f.component(f.depth() - 1) + ".r");
            break;
        case OpKind::Chmod:
        case OpKind::ChmodRecursive:
            op.target = kind == OpKind::ChmodRecursive ? f.parent() : f;
            op.new_mode = (create_counter_ + mkdir_counter_) % 2 ? 0744 : 0644;
            break;
        case OpKind::Chown:
        case OpKind::ChownRecursive:
            op.target = kind == OpKind::ChownRecursive ? f.parent() : f;
            op.new_owner = 1000;
            op.new_group = 1000 + (file_idx % 2);
            break;
        case OpKind::Utime:
            op.target = f;
            op.new_mtime = 1;
            op.new_atime = 1;
            break;
        default:
            op.target = f;
            break;
    }
    return op;
}

void WorkloadSampler::hot_in_shift() {
    size_t n = ranked_.size();
    size_t k = std::min<size_t>(spec_.hot_in_k, n);
    if (k == 0) return;
    std::rotate(ranked_.begin(), ranked_.end() - k, ranked_.end());
}

Trace sample_trace(const WorkloadSpec& spec, int n_clients, uint64_t length) {
    Trace trace;
    trace.spec = spec;
    trace.n_clients = n_clients;
    BuiltNamespace ns = build_namespace(spec);
    WorkloadSampler sampler(spec, ns);
    Rng rng(spec.seed);

    std::vector<MetaOp> body, tail;
    body.reserve(length);
    for (uint64_t i = 0; i < length; ++i) {
        MetaOp op = sampler.sample(rng);
        if (op_is_destructive(op.kind)) {
            tail.push_back(std::move(op));
        } else {
            body.push_back(std::move(op));
        }
    }
    trace.entries.reserve(length);
    int c = 0;
    for (auto& op : body) {
        trace.entries.push_back({c % n_clients, std::move(op)});
        ++c;
    }
    for (auto& op : tail) {
        trace.entries.push_back({c % n_clients, std::move(op)});
        ++c;
    }
    return trace;
}

std::string format_meta_op(const MetaOp& op) {
    std::ostringstream os;
    os << op_name(op.kind) << '\t' << op.target.str() << '\t';
    switch (op.kind) {
        case OpKind::Chmod:
        case OpKind::ChmodRecursive:
        case OpKind::Mkdir:
        case OpKind::Create:
            os << '0' << std::oct << op.new_mode;
            break;
        case OpKind::Chown:
        case OpKind::ChownRecursive:
            os << op.new_owner << ':' << op.new_group;
            break;
        case OpKind::Rename:
            os << op.rename_to.str();
            break;
        case OpKind::Utime:
            os << op.new_mtime << ':' << op.new_atime;
            break;
        default:
            os << '-';
            break;
    }
    return os.str();
}

void Trace::write(std::ostream& out) const {
    out << "#fletchsim-trace v1 clients=" << n_clients << ' ' << spec.echo()
        << '\n';
    for (const auto& e : entries) {
        out << e.client << '\t' << format_meta_op(e.op) << '\n';
    }
}

std::optional<Trace> Trace::read(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) return std::nullopt;
    const std::string magic = "#fletchsim-trace v1 ";
    if (header.rfind(magic, 0) != 0) return std::nullopt;
    std::string rest = header.substr(magic.size());
    size_t sp = rest.find(' ');
    if (sp == std::string::npos || rest.rfind("clients=", 0) != 0)
        return std::nullopt;
    Trace trace;
    trace.n_clients = std::stoi(rest.substr(8, sp - 8));
    auto spec = WorkloadSpec::parse_echo(rest.substr(sp + 1));
    if (!spec) return std::nullopt;
    trace.spec = *spec;

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string client_s, op_s, path_s, args;
        if (!std::getline(ls, client_s, '\t') ||
            !std::getline(ls, op_s, '\t') || !std::getline(ls, path_s, '\t') ||
            !std::getline(ls, args))
            return std::nullopt;
        TraceEntry e;
        e.client = std::stoi(client_s);
        auto kind = op_from_name(op_s);
        auto path = Path::parse(path_s);
        if (!kind || !path) return std::nullopt;
        e.op.kind = *kind;
        e.op.target = *path;
        switch (*kind) {
            case OpKind::Chmod:
            case OpKind::ChmodRecursive:
            case OpKind::Mkdir:
            case OpKind::Create:
                e.op.new_mode =
                    static_cast<uint16_t>(std::stoul(args, nullptr, 8));
                break;
            case OpKind::Chown:
            case OpKind::ChownRecursive: {
                size_t colon = args.find(':');
                if (colon == std::string::npos) return std::nullopt;
                e.op.new_owner = std::stoul(args.substr(0, colon));
                e.op.new_group = std::stoul(args.substr(colon + 1));
                break;
            }
            case OpKind::Rename: {
                auto dst = Path::parse(args);
                if (!dst) return std::nullopt;
                e.op.rename_to = *dst;
                break;
            }
            case OpKind::Utime: {
                size_t colon = args.find(':');
                if (colon == std::string::npos) return std::nullopt;
                e.op.new_mtime = std::stoul(args.substr(0, colon));
                e.op.new_atime = std::stoul(args.substr(colon + 1));
                break;
            }
            default:
                break;
        }
        trace.entries.push_back(std::move(e));
    }
    return trace;
}

}  // namespace fletchsim
