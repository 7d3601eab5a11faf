#include "fletchsim/simulation.hpp"

#include <algorithm>
#include <ostream>
#include <set>

namespace fletchsim {

Simulation::Simulation(const SimConfig& cfg, const WorkloadSpec& spec)
    : Simulation(cfg, spec, build_namespace(spec)) {}

Simulation::Simulation(const SimConfig& cfg, const WorkloadSpec& spec,
                       BuiltNamespace ns)
    : cfg_(cfg),
      spec_(spec),
      hasher_(cfg.hash_mode),
      ring_(cfg.n_servers),
      ns_(std::move(ns)),
      net_rng_(cfg.seed ^ 0x6e65740000ULL),
      workload_rng_(spec.seed) {
    metrics_.per_server_ops.assign(cfg_.n_servers, 0);
    metrics_.collect_latencies = cfg_.collect_latencies;

    switch_ = std::make_unique<SwitchDataplane>(*this, hasher_, ring_);
    controller_ = std::make_unique<Controller>(*this, hasher_, ring_);
    for (int s = 0; s < cfg_.n_servers; ++s)
        servers_.push_back(std::make_unique<MetadataServer>(*this, s, hasher_));

    // Shards: every directory everywhere, files on their owners.
    ns_.tree.visit([&](const Path& p, const MetadataRecord& rec) {
        if (p.is_root()) return;
        if (rec.kind == NodeKind::Directory) {
            for (auto& srv : servers_) srv->shard().insert(p, rec);
        } else {
            servers_[ring_.owner_of_path(p.str())]->shard().insert(p, rec);
        }
    });

    // The root record is permanently cached: mirror it into the match
    // table so the controller's view and the switch agree exactly.
    const MetadataRecord* root_rec = ns_.tree.find(Path());
    switch_->set_root_record(*root_rec);
    CtrlMsg root_admit;
    root_admit.kind = CtrlMsg::Kind::Admit;
    CtrlMsg::AdmitEntry root_entry;
    root_entry.path = "/";
    root_entry.key = hasher_.root_key();
    root_entry.token = controller_->cached_entry("/")->second;
    root_entry.slot = *controller_->slot_of("/");
    root_entry.record = *root_rec;
    root_admit.entries.push_back(std::move(root_entry));
    switch_->apply_control(root_admit);

    sampler_ = std::make_unique<WorkloadSampler>(spec_, ns_);

    for (int c = 0; c < cfg_.n_clients; ++c) {
        clients_.push_back(std::make_unique<ClientDriver>(
            *this, c, hasher_,
            [this](int id) { return next_op(id); },
            [this](const Packet& resp, SimTime lat) {
                on_client_done(resp, lat);
            }));
    }
    per_client_ops_.resize(cfg_.n_clients);
}

void Simulation::load_trace(const Trace& trace) {
    for (const auto& e : trace.entries) {
        per_client_ops_[e.client % cfg_.n_clients].push_back(e.op);
    }
}

void Simulation::use_dynamic_workload(uint64_t max_ops) {
    dynamic_mode_ = true;
    dynamic_remaining_ = max_ops;
    next_shift_ = spec_.hot_in ? spec_.hot_in_period : kNever;
}

std::optional<MetaOp> Simulation::next_op(int client) {
    if (dynamic_mode_) {
        if (dynamic_remaining_ == 0) return std::nullopt;
        if (cfg_.duration && now() >= cfg_.duration) return std::nullopt;
        while (spec_.hot_in && now() >= next_shift_) {
            sampler_->hot_in_shift();
            next_shift_ += spec_.hot_in_period;
        }
        --dynamic_remaining_;
        return sampler_->sample(workload_rng_);
    }
    auto& q = per_client_ops_[client];
    if (q.empty()) return std::nullopt;
    if (cfg_.duration && now() >= cfg_.duration) return std::nullopt;
    MetaOp op = std::move(q.front());
    q.pop_front();
    return op;
}

void Simulation::preload_cache() {
    if (cfg_.scheme != Scheme::Fletch || cfg_.preload_files == 0) return;
    std::vector<std::pair<std::string, MetadataRecord>> plan;
    std::set<std::string> planned = {"/"};
    for (const Path& f : sampler_->hottest_files(cfg_.preload_files)) {
        std::vector<std::pair<std::string, MetadataRecord>> chain;
        for (const Path& lvl : f.levels()) {
            std::string s = lvl.str();
            if (planned.count(s)) continue;
            const MetadataRecord* rec = ns_.tree.find(lvl);
            if (!rec) break;
            chain.emplace_back(s, *rec);
        }
        if (plan.size() + chain.size() + 1 > cfg_.cache_capacity) break;
        for (auto& [s, rec] : chain) {
            planned.insert(s);
            plan.emplace_back(s, rec);
        }
    }
    controller_->preload(
        plan, [&](const CtrlMsg& m) { switch_->apply_control(m); },
        [&](int s, const CtrlMsg& m) { servers_[s]->on_control(m); });
}

void Simulation::preload_exact(const std::vector<std::string>& paths) {
    std::vector<std::pair<std::string, MetadataRecord>> plan;
    for (const auto& p : paths) {
        if (p == "/") continue;
        const MetadataRecord* rec = ns_.tree.find(Path::require(p));
        if (rec) plan.emplace_back(p, *rec);
    }
    controller_->preload(
        plan, [&](const CtrlMsg& m) { switch_->apply_control(m); },
        [&](int s, const CtrlMsg& m) { servers_[s]->on_control(m); });
}

void Simulation::schedule_freq_pull() {
    queue_.after(cfg_.freq_pull_period, [this]() {
        if (!clients_active()) return;
        controller_->periodic_pull();
        schedule_freq_pull();
    });
}

bool Simulation::clients_active() const {
    for (const auto& c : clients_)
        if (!c->idle()) return true;
    return false;
}

Metrics Simulation::run() {
    preload_cache();
    for (auto& c : clients_) c->start();
    if (cfg_.scheme == Scheme::Fletch) schedule_freq_pull();
    while (queue_.step()) {
    }
    if (cfg_.per_second_series)
        metrics_.per_second_completed = second_buckets_;
    return metrics_;
}

void Simulation::on_client_done(const Packet& resp, SimTime latency) {
    if (cfg_.per_second_series) {
        size_t sec = static_cast<size_t>(now() / kSec);
        if (second_buckets_.size() <= sec) second_buckets_.resize(sec + 1, 0);
        second_buckets_[sec] += 1;
    }
    if (response_hook) response_hook(resp, latency);
}

// ---- network legs ----

void Simulation::client_to_switch(Packet pkt) {
    pkt.id = next_packet_id_++;
    queue_.after(cfg_.lat_client_switch, [this, p = std::move(pkt)]() mutable {
        switch_->on_client_packet(std::move(p));
    });
}

void Simulation::switch_to_client(int client, Packet pkt) {
    queue_.after(cfg_.switch_traversal + cfg_.lat_client_switch,
                 [this, client, p = std::move(pkt)]() mutable {
                     clients_[client]->on_response(std::move(p));
                 });
}

void Simulation::switch_to_server(int server, Packet pkt) {
    queue_.after(cfg_.switch_traversal + cfg_.lat_switch_server,
                 [this, server, p = std::move(pkt)]() mutable {
                     servers_[server]->on_request(std::move(p));
                 });
}

void Simulation::server_to_switch(Packet pkt) {
    if (pkt.lock_related && net_rng_.bernoulli(cfg_.loss_server_response)) {
        metrics_.responses_dropped += 1;
        return;
    }
    queue_.after(cfg_.lat_switch_server, [this, p = std::move(pkt)]() mutable {
        switch_->on_server_packet(std::move(p));
    });
}

void Simulation::ack_to_server(int server, uint8_t seq) {
    if (net_rng_.bernoulli(cfg_.loss_ack)) {
        metrics_.acks_dropped += 1;
        return;
    }
    queue_.after(cfg_.switch_traversal + cfg_.lat_switch_server,
                 [this, server, seq]() { servers_[server]->on_ack(seq); });
}

void Simulation::hot_report(std::string path, HashKey key) {
    queue_.after(cfg_.lat_ctrl_switch, [this, p = std::move(path), key]() {
        controller_->on_hot_report(p, key);
    });
}

void Simulation::ctrl_to_server(int server, CtrlMsg msg) {
    queue_.after(cfg_.lat_ctrl_server,
                 [this, server, m = std::move(msg)]() mutable {
                     servers_[server]->on_control(std::move(m));
                 });
}

void Simulation::ctrl_reply(CtrlMsg msg) {
    if (net_rng_.bernoulli(cfg_.loss_control)) return;
    queue_.after(cfg_.lat_ctrl_server, [this, m = std::move(msg)]() mutable {
        controller_->on_fetch_reply(m);
    });
}

void Simulation::ctrl_to_switch(CtrlMsg msg) {
    queue_.after(cfg_.lat_ctrl_switch, [this, m = std::move(msg)]() mutable {
        switch_->apply_control(m);
    });
}

void Simulation::switch_ctrl_reply(CtrlMsg msg) {
    queue_.after(cfg_.lat_ctrl_switch, [this, m = std::move(msg)]() mutable {
        controller_->on_freq_reply(m);
    });
}

// ---- federation-layer execution ----

void Simulation::bump_version(const std::string& path) {
    PathHist& h = history_[path];
    h.version += 1;
    h.mutation_times.push_back(now());
}

OpResult Simulation::execute_op(const MetaOp& op, const Principal& who,
                                int coordinator) {
    NamespaceTree& coord = servers_[coordinator]->shard();
    uint32_t ts = now_sec();

    if (op.kind == OpKind::Readdir) {
        OpResult r = coord.apply(op, who, ts);
        if (r.status != Status::Ok) return r;
        // Merge the other shards' files into the listing.
        std::set<std::string> seen;
        for (const auto& e : r.listing) seen.insert(e.name);
        for (int s = 0; s < cfg_.n_servers; ++s) {
            if (s == coordinator) continue;
            const NamespaceTree& shard = servers_[s]->shard();
            for (const auto& name : shard.children_of(op.target)) {
                if (!seen.insert(name).second) continue;
                const MetadataRecord* rec = shard.find(op.target.child(name));
                if (rec) r.listing.push_back({name, *rec});
            }
        }
        std::sort(r.listing.begin(), r.listing.end(),
                  [](const DirEntry& a, const DirEntry& b) {
                      return a.name < b.name;
                  });
        return r;
    }
    if (op_is_read(op.kind)) return coord.apply(op, who, ts);

    const MetadataRecord* existing = coord.find(op.target);
    bool target_is_dir = existing && existing->kind == NodeKind::Directory;

    switch (op.kind) {
        case OpKind::Create: {
            int owner = ring_.owner_of_path(op.target.str());
            OpResult r = servers_[owner]->shard().apply(op, who, ts);
            if (r.status == Status::Ok) bump_version(op.target.str());
            return r;
        }
        case OpKind::Delete: {
            if (target_is_dir) return coord.apply(op, who, ts);  // error path
            int owner = ring_.owner_of_path(op.target.str());
            OpResult r = servers_[owner]->shard().apply(op, who, ts);
            if (r.status == Status::Ok) bump_version(op.target.str());
            return r;
        }
        case OpKind::Mkdir: {
            OpResult r = coord.apply(op, who, ts);
            if (r.status != Status::Ok) return r;
            for (int s = 0; s < cfg_.n_servers; ++s)
                if (s != coordinator) servers_[s]->shard().apply(op, who, ts);
            bump_version(op.target.str());
            return r;
        }
        case OpKind::Rmdir: {
            // Emptiness is a global property across shards.
            for (int s = 0; s < cfg_.n_servers; ++s) {
                if (servers_[s]->shard().exists(op.target) &&
                    !servers_[s]->shard().children_of(op.target).empty()) {
                    OpResult r;
                    r.status = Status::NotEmpty;
                    return r;
                }
            }
            OpResult r = coord.apply(op, who, ts);
            if (r.status != Status::Ok) return r;
            for (int s = 0; s < cfg_.n_servers; ++s)
                if (s != coordinator) servers_[s]->shard().apply(op, who, ts);
            bump_version(op.target.str());
            return r;
        }
        case OpKind::Rename: {
            int src_owner = ring_.owner_of_path(op.target.str());
            NamespaceTree& src_shard = servers_[src_owner]->shard();
            OpResult r = src_shard.apply(op, who, ts);
            if (r.status != Status::Ok) return r;
            int dst_owner = ring_.owner_of_path(op.rename_to.str());
            if (dst_owner != src_owner) {
                const MetadataRecord* moved = src_shard.find(op.rename_to);
                if (moved) {
                    servers_[dst_owner]->shard().insert(op.rename_to, *moved);
                    src_shard.erase_raw(op.rename_to);
                }
            }
            bump_version(op.target.str());
            bump_version(op.rename_to.str());
            return r;
        }
        case OpKind::Chmod:
        case OpKind::Chown:
        case OpKind::Utime: {
            if (!target_is_dir) {
                int owner = ring_.owner_of_path(op.target.str());
                OpResult r = servers_[owner]->shard().apply(op, who, ts);
                if (r.status == Status::Ok) bump_version(op.target.str());
                return r;
            }
            OpResult r = coord.apply(op, who, ts);
            if (r.status != Status::Ok) return r;
            for (int s = 0; s < cfg_.n_servers; ++s)
                if (s != coordinator) servers_[s]->shard().apply(op, who, ts);
            bump_version(op.target.str());
            return r;
        }
        case OpKind::ChmodRecursive:
        case OpKind::ChownRecursive: {
            if (!target_is_dir) {
                int owner = ring_.owner_of_path(op.target.str());
                OpResult r = servers_[owner]->shard().apply(op, who, ts);
                if (r.status == Status::Ok) {
                    bump_version(op.target.str());
                    r.multi_updated = {op.target};
                }
                return r;
            }
            OpResult r = coord.apply(op, who, ts);
            if (r.status != Status::Ok) return r;
            std::set<std::string> updated;
            for (const Path& p : r.multi_updated) updated.insert(p.str());
            for (int s = 0; s < cfg_.n_servers; ++s) {
                if (s == coordinator) continue;
                OpResult rs = servers_[s]->shard().apply(op, who, ts);
                for (const Path& p : rs.multi_updated) updated.insert(p.str());
            }
            std::vector<Path> merged;
            merged.reserve(updated.size());
            for (const auto& s : updated) {
                if (s == op.target.str()) continue;
                merged.push_back(Path::require(s));
            }
            std::sort(merged.begin(), merged.end(),
                      [](const Path& a, const Path& b) {
                          if (a.depth() != b.depth())
                              return a.depth() > b.depth();
                          return a < b;
                      });
            merged.push_back(op.target);
            for (const Path& p : merged) bump_version(p.str());
            r.multi_updated = std::move(merged);
            return r;
        }
        default: {
            OpResult r;
            r.status = Status::MalformedPath;
            return r;
        }
    }
}

bool Simulation::write_blocked(const MetaOp& op) const {
    const std::string target = op.target.str();
    bool multi = op_is_multi_path(op.kind) && !op_is_read(op.kind);
    for (const auto& srv : servers_) {
        for (const auto& b : srv->blocked_paths()) {
            if (b == target) return true;
            if (op.kind == OpKind::Rename && b == op.rename_to.str())
                return true;
            if (multi) {
                // A recursive write touches every descendant of its target.
                if (target == "/" ||
                    (b.size() > target.size() &&
                     b.compare(0, target.size(), target) == 0 &&
                     b[target.size()] == '/'))
                    return true;
            }
        }
    }
    return false;
}

void Simulation::wake_blocked_writes() {
    for (auto& srv : servers_) srv->wake_parked();
}

Token Simulation::owner_token(const std::string& path) const {
    int owner = ring_.owner_of_path(path);
    // Server token entries never expire; lookup with time 0 is safe.
    return const_cast<MetadataServer&>(*servers_[owner])
        .token_map()
        .lookup(path, 0);
}

const MetadataRecord* Simulation::authoritative_record(
    const std::string& path) const {
    auto p = Path::parse(path);
    if (!p) return nullptr;
    int owner = ring_.owner_of_path(path);
    return servers_[owner]->shard().find(*p);
}

uint64_t Simulation::path_version(const std::string& path) const {
    auto it = history_.find(path);
    return it == history_.end() ? 0 : it->second.version;
}

SimTime Simulation::version_valid_until(const std::string& path,
                                        uint64_t version) const {
    auto it = history_.find(path);
    if (it == history_.end()) return kNever;
    const auto& times = it->second.mutation_times;
    if (version + 1 < times.size()) return times[version + 1];
    return kNever;
}

void Simulation::violation(const std::string& what) {
    metrics_.violations[what] += 1;
}

void Simulation::trace_event(const Packet& pkt, const char* stage) {
    if (!cfg_.dump_events || !event_sink_) return;
    *event_sink_ << to_seconds(now()) << '\t' << pkt.id << '\t'
                 << op_name(pkt.op.kind) << '\t' << pkt.op.target.str() << '\t'
                 << stage << '\t' << pkt.cursor << '\n';
}

// ---- audits ----

bool Simulation::quiescent() const {
    for (const auto& c : clients_)
        if (!c->idle()) return false;
    for (const auto& s : servers_)
        if (!s->quiescent()) return false;
    return controller_->admission_idle();
}

bool Simulation::audit_lock_balance() {
    if (!switch_->locks_all_zero()) {
        violation("lock_balance_nonzero");
        return false;
    }
    return true;
}

bool Simulation::audit_write_through() {
    bool ok = true;
    for (uint32_t s = 0; s < switch_->capacity(); ++s) {
        auto view = switch_->slot_view(s);
        if (!view.in_use || !view.valid || view.path == "/") continue;
        const MetadataRecord* server_rec = authoritative_record(view.path);
        if (view.record.deleted) {
            if (server_rec != nullptr) {
                violation("write_through_tombstone");
                ok = false;
            }
            continue;
        }
        if (!server_rec || server_rec->serialize() != view.record.serialize()) {
            violation("write_through_divergence");
            ok = false;
        }
    }
    return ok;
}

bool Simulation::audit_mirror() {
    bool ok = true;
    size_t n = 0;
    for (const auto& path : controller_->cached_paths()) {
        ++n;
        auto entry = controller_->cached_entry(path);
        if (!entry || !switch_->mat().contains(entry->first, entry->second)) {
            violation("mirror_missing_at_switch");
            ok = false;
        }
    }
    if (switch_->mat().size() != n) {
        violation("mirror_extra_at_switch");
        ok = false;
    }
    return ok;
}

bool Simulation::audit_conservation() {
    if (metrics_.issued != metrics_.completed) {
        violation("conservation_mismatch");
        return false;
    }
    return true;
}

}  // namespace fletchsim
