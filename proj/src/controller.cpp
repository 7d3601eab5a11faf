#include "fletchsim/controller.hpp"

#include <algorithm>
#include <sstream>

namespace fletchsim {

namespace {

size_t path_depth(const std::string& s) {
    if (s == "/") return 0;
    return static_cast<size_t>(std::count(s.begin(), s.end(), '/'));
}

std::string parent_of(const std::string& s) {
    if (s == "/") return s;
    size_t pos = s.rfind('/');
    return pos == 0 ? "/" : s.substr(0, pos);
}

// Lower frequency first, then greater depth, then lexicographic.
bool eviction_before(uint64_t fa, const std::string& pa, uint64_t fb,
                     const std::string& pb) {
    if (fa != fb) return fa < fb;
    size_t da = path_depth(pa), db = path_depth(pb);
    if (da != db) return da > db;
    return pa < pb;
}

}  // namespace

Controller::Controller(SimEnv& env, const PathHasher& hasher,
                       const ConsistentHashRing& ring)
    : env_(env),
      hasher_(hasher),
      ring_(ring),
      capacity_(env.config().cache_capacity) {
    for (uint32_t s = 0; s < capacity_; ++s) free_slots_.insert(s);
    // The root is permanently cached and holds the first slot.
    CachedEntry root;
    root.key = hasher_.root_key();
    root.token = *tokens_.allocate("/", root.key);
    root.slot = *free_slots_.begin();
    free_slots_.erase(free_slots_.begin());
    cached_.emplace("/", root);
    kind_hint_["/"] = NodeKind::Directory;
}

std::vector<std::string> Controller::cached_paths() const {
    std::vector<std::string> out;
    out.reserve(cached_.size());
    for (const auto& [p, e] : cached_) out.push_back(p);
    return out;
}

std::optional<std::pair<HashKey, Token>> Controller::cached_entry(
    const std::string& path) const {
    auto it = cached_.find(path);
    if (it == cached_.end()) return std::nullopt;
    return std::make_pair(it->second.key, it->second.token);
}

std::optional<uint32_t> Controller::slot_of(const std::string& path) const {
    auto it = cached_.find(path);
    if (it == cached_.end()) return std::nullopt;
    return it->second.slot;
}

uint64_t Controller::reported_frequency(const std::string& path) const {
    auto it = cached_.find(path);
    return it == cached_.end() ? 0 : it->second.reported_freq;
}

void Controller::set_reported_frequency(const std::string& path,
                                        uint64_t freq) {
    auto it = cached_.find(path);
    if (it != cached_.end()) it->second.reported_freq = freq;
}

int Controller::route_owner(const std::string& path) const {
    return ring_.owner_of_path(path);
}

bool Controller::is_dir(const std::string& path) const {
    auto it = kind_hint_.find(path);
    return it != kind_hint_.end() && it->second == NodeKind::Directory;
}

void Controller::log_action(const std::string& line) {
    std::ostringstream os;
    os << to_seconds(env_.now()) << ' ' << line;
    log_.push_back(os.str());
}

void Controller::on_hot_report(const std::string& path, HashKey) {
    if (cached_.count(path) || queued_.count(path)) return;
    if (admission_ && admission_->hot_path == path) return;
    queued_.insert(path);
    report_queue_.push_back(path);
    try_start();
}

void Controller::try_start() {
    if (admission_) return;
    while (!report_queue_.empty()) {
        std::string path = std::move(report_queue_.front());
        report_queue_.pop_front();
        queued_.erase(path);
        if (cached_.count(path)) continue;  // stale by now

        Admission adm;
        adm.hot_path = path;
        auto parsed = Path::parse(path);
        if (!parsed) continue;
        for (const Path& lvl : parsed->levels()) {
            std::string s = lvl.str();
            if (!cached_.count(s)) adm.to_admit.push_back(s);
        }
        if (adm.to_admit.empty()) continue;
        adm.xid = next_xid_++;
        adm.retries_left = env_.config().ctrl_fetch_retries;
        admission_ = std::move(adm);
        begin_fetch(*admission_);
        return;
    }
}

void Controller::begin_fetch(Admission& adm) {
    std::map<int, std::vector<std::string>> per_server;
    for (const auto& p : adm.to_admit) per_server[route_owner(p)].push_back(p);
    for (auto& [server, paths] : per_server) {
        adm.contacted.insert(server);
        adm.awaiting.insert(server);
        CtrlMsg msg;
        msg.kind = CtrlMsg::Kind::FetchAndBlock;
        msg.xid = adm.xid;
        msg.paths = paths;
        env_.ctrl_to_server(server, std::move(msg));
    }
    arm_fetch_timer(adm.xid);
}

void Controller::arm_fetch_timer(uint64_t xid) {
    env_.after(env_.config().ctrl_fetch_timeout, [this, xid]() {
        if (!admission_ || admission_->xid != xid ||
            admission_->awaiting.empty())
            return;
        if (--admission_->retries_left < 0) {
            abort_admission("fetch_timeout");
            return;
        }
        for (int server : admission_->awaiting) {
            CtrlMsg msg;
            msg.kind = CtrlMsg::Kind::FetchAndBlock;
            msg.xid = admission_->xid;
            for (const auto& p : admission_->to_admit)
                if (route_owner(p) == server) msg.paths.push_back(p);
            env_.ctrl_to_server(server, std::move(msg));
        }
        arm_fetch_timer(xid);
    });
}

void Controller::on_fetch_reply(const CtrlMsg& msg) {
    if (!admission_ || admission_->xid != msg.xid) return;
    Admission& adm = *admission_;
    if (!adm.awaiting.count(msg.server)) return;  // duplicate reply
    adm.awaiting.erase(msg.server);
    for (size_t i = 0; i < msg.paths.size(); ++i) {
        if (msg.statuses[i] != Status::Ok) {
            adm.fetch_failed = true;
        } else {
            adm.fetched[msg.paths[i]] = msg.records[i];
        }
    }
    if (adm.awaiting.empty()) proceed_after_fetch();
}

void Controller::proceed_after_fetch() {
    Admission& adm = *admission_;
    if (adm.fetch_failed) {
        abort_admission("target_missing");
        return;
    }
    if (free_slots_.size() >= adm.to_admit.size()) {
        install_and_distribute();
        return;
    }
    adm.candidates = select_eviction_candidates(adm.to_admit.size());
    if (adm.candidates.empty()) {
        abort_admission("nothing_evictable");
        return;
    }
    request_live_frequencies();
}

std::vector<std::string> Controller::select_eviction_candidates(
    size_t need) const {
    // Paths the in-flight admission depends on stay pinned.
    std::set<std::string> protect;
    if (admission_) {
        auto p = Path::parse(admission_->hot_path);
        if (p) {
            for (const Path& lvl : p->levels()) protect.insert(lvl.str());
        }
    }

    std::set<std::string> chosen;
    std::vector<std::string> out;
    const size_t cap = 2 * need;
    while (out.size() < cap) {
        const std::string* best = nullptr;
        uint64_t best_freq = 0;
        for (const auto& [path, e] : cached_) {
            if (path == "/" || chosen.count(path) || protect.count(path))
                continue;
            if (!evictable(path, chosen)) continue;
            if (!best || eviction_before(e.reported_freq, path, best_freq,
                                         *best)) {
                best = &path;
                best_freq = e.reported_freq;
            }
        }
        if (!best) break;
        // The picked leaf plus its single-child ancestor chain.
        std::string cur = *best;
        while (out.size() < cap) {
            chosen.insert(cur);
            out.push_back(cur);
            std::string par = parent_of(cur);
            if (par == "/" || protect.count(par) || chosen.count(par)) break;
            if (!evictable(par, chosen)) break;
            cur = par;
        }
    }
    return out;
}

// True when every cached child of path is already marked for removal.
bool Controller::evictable(const std::string& path,
                           const std::set<std::string>& chosen) const {
    auto it = cached_.find(path);
    if (it == cached_.end()) return false;
    if (it->second.cached_children == 0) return true;
    int remaining = it->second.cached_children;
    for (const auto& c : chosen) {
        if (parent_of(c) == path) --remaining;
    }
    return remaining == 0;
}

void Controller::request_live_frequencies() {
    Admission& adm = *admission_;
    adm.xid = next_xid_++;
    CtrlMsg msg;
    msg.kind = CtrlMsg::Kind::PullFreq;
    msg.xid = adm.xid;
    for (const auto& p : adm.candidates) {
        auto it = cached_.find(p);
        if (it == cached_.end()) continue;
        msg.paths.push_back(p);
        msg.kt.emplace_back(it->second.key, it->second.token);
    }
    env_.ctrl_to_switch(std::move(msg));
}

void Controller::on_freq_reply(const CtrlMsg& msg) {
    if (msg.xid == periodic_xid_) {
        for (size_t i = 0; i < msg.paths.size(); ++i) {
            auto it = cached_.find(msg.paths[i]);
            if (it != cached_.end())
                it->second.reported_freq = msg.counts[i];
        }
        return;
    }
    if (!admission_ || admission_->xid != msg.xid) return;
    std::map<std::string, uint64_t> live;
    for (size_t i = 0; i < msg.paths.size(); ++i)
        live[msg.paths[i]] = msg.counts[i];
    evict_with_live(live);
}

void Controller::evict_one(const std::string& leaf,
                           std::vector<std::string>& order) {
    std::set<std::string> protect;
    if (admission_) {
        auto p = Path::parse(admission_->hot_path);
        if (p)
            for (const Path& lvl : p->levels()) protect.insert(lvl.str());
    }
    std::string cur = leaf;
    for (;;) {
        auto it = cached_.find(cur);
        if (it == cached_.end()) break;
        free_slots_.insert(it->second.slot);
        cached_.erase(it);
        order.push_back(cur);
        std::string par = parent_of(cur);
        auto pit = cached_.find(par);
        if (pit != cached_.end()) pit->second.cached_children -= 1;
        if (par == "/" || protect.count(par)) break;
        if (pit == cached_.end() || pit->second.cached_children != 0) break;
        cur = par;
    }
}

void Controller::evict_with_live(const std::map<std::string, uint64_t>& live) {
    Admission& adm = *admission_;
    size_t need = adm.to_admit.size();
    std::vector<std::string> evict_order;

    std::set<std::string> remaining(adm.candidates.begin(),
                                    adm.candidates.end());
    while (free_slots_.size() < need) {
        const std::string* best = nullptr;
        uint64_t best_freq = 0;
        for (const auto& c : remaining) {
            auto it = cached_.find(c);
            if (it == cached_.end()) continue;  // evicted via a chain
            if (it->second.cached_children != 0) continue;
            uint64_t f = live.count(c) ? live.at(c) : 0;
            if (!best || eviction_before(f, c, best_freq, *best)) {
                best = &c;
                best_freq = f;
            }
        }
        if (!best) break;
        std::string leaf = *best;
        remaining.erase(leaf);
        evict_one(leaf, evict_order);
    }

    if (!evict_order.empty()) {
        CtrlMsg evict;
        evict.kind = CtrlMsg::Kind::Evict;
        for (const auto& p : evict_order) {
            Token t = *tokens_.lookup(p);
            evict.kt.emplace_back(hasher_.hash_level(Path::require(p)), t);
            evict.paths.push_back(p);
        }
        env_.ctrl_to_switch(std::move(evict));
        remove_tokens(evict_order);
        env_.metrics().evicted_paths += evict_order.size();
        std::ostringstream os;
        os << "evict";
        for (const auto& p : evict_order) os << ' ' << p;
        log_action(os.str());
        adm.evicted_so_far += evict_order.size();
        if (post_action_hook) post_action_hook();
    }

    if (free_slots_.size() >= need) {
        install_and_distribute();
        return;
    }
    // Candidates ran out before enough space freed: select again.
    adm.candidates = select_eviction_candidates(need - free_slots_.size());
    if (adm.candidates.empty()) {
        abort_admission("nothing_evictable");
        return;
    }
    request_live_frequencies();
}

void Controller::install_and_distribute() {
    Admission& adm = *admission_;
    CtrlMsg admit;
    admit.kind = CtrlMsg::Kind::Admit;
    std::vector<Token> toks;
    for (const auto& p : adm.to_admit) {
        HashKey key = hasher_.hash_level(Path::require(p));
        auto tok = tokens_.allocate(p, key);
        if (!tok) {
            abort_admission("token_space_exhausted");
            return;
        }
        uint32_t slot = *free_slots_.begin();
        free_slots_.erase(free_slots_.begin());
        CachedEntry e;
        e.key = key;
        e.token = *tok;
        e.slot = slot;
        cached_.emplace(p, e);
        auto pit = cached_.find(parent_of(p));
        if (pit != cached_.end() && p != "/") pit->second.cached_children += 1;
        kind_hint_[p] = adm.fetched[p].kind;

        CtrlMsg::AdmitEntry entry;
        entry.path = p;
        entry.key = key;
        entry.token = *tok;
        entry.slot = slot;
        entry.record = adm.fetched[p];
        admit.entries.push_back(std::move(entry));
        toks.push_back(*tok);
    }
    env_.ctrl_to_switch(std::move(admit));
    distribute_tokens(adm.to_admit, toks);

    for (int server : adm.contacted) {
        CtrlMsg unblock;
        unblock.kind = CtrlMsg::Kind::Unblock;
        unblock.paths = adm.to_admit;
        env_.ctrl_to_server(server, std::move(unblock));
    }

    env_.metrics().admissions += 1;
    env_.metrics().admitted_paths += adm.to_admit.size();
    std::ostringstream os;
    os << "admit";
    for (const auto& p : adm.to_admit) os << ' ' << p;
    log_action(os.str());
    finish_admission();
}

void Controller::abort_admission(const std::string& reason) {
    Admission& adm = *admission_;
    for (int server : adm.contacted) {
        CtrlMsg unblock;
        unblock.kind = CtrlMsg::Kind::Unblock;
        unblock.paths = adm.to_admit;
        env_.ctrl_to_server(server, std::move(unblock));
    }
    env_.metrics().admissions_aborted += 1;
    log_action("abort " + adm.hot_path + " " + reason);
    finish_admission();
}

void Controller::finish_admission() {
    admission_.reset();
    if (post_action_hook) post_action_hook();
    env_.after(0, [this]() { try_start(); });
}

void Controller::distribute_tokens(const std::vector<std::string>& paths,
                                   const std::vector<Token>& toks) {
    std::map<int, CtrlMsg> per_server;
    int n = env_.config().n_servers;
    for (size_t i = 0; i < paths.size(); ++i) {
        std::vector<int> targets;
        if (is_dir(paths[i])) {
            for (int s = 0; s < n; ++s) targets.push_back(s);
        } else {
            targets.push_back(route_owner(paths[i]));
        }
        for (int s : targets) {
            CtrlMsg& m = per_server[s];
            m.kind = CtrlMsg::Kind::TokenInstall;
            m.paths.push_back(paths[i]);
            m.tokens.push_back(toks[i]);
        }
    }
    for (auto& [server, msg] : per_server)
        env_.ctrl_to_server(server, std::move(msg));
}

void Controller::remove_tokens(const std::vector<std::string>& paths) {
    std::map<int, CtrlMsg> per_server;
    int n = env_.config().n_servers;
    for (const auto& p : paths) {
        std::vector<int> targets;
        if (is_dir(p)) {
            for (int s = 0; s < n; ++s) targets.push_back(s);
        } else {
            targets.push_back(route_owner(p));
        }
        for (int s : targets) {
            CtrlMsg& m = per_server[s];
            m.kind = CtrlMsg::Kind::TokenRemove;
            m.paths.push_back(p);
        }
    }
    for (auto& [server, msg] : per_server)
        env_.ctrl_to_server(server, std::move(msg));
}

void Controller::periodic_pull() {
    if (cached_.empty()) return;
    periodic_xid_ = next_xid_++;
    CtrlMsg msg;
    msg.kind = CtrlMsg::Kind::PullFreqAndReset;
    msg.xid = periodic_xid_;
    for (const auto& [p, e] : cached_) {
        msg.paths.push_back(p);
        msg.kt.emplace_back(e.key, e.token);
    }
    env_.ctrl_to_switch(std::move(msg));
}

void Controller::preload(
    const std::vector<std::pair<std::string, MetadataRecord>>& paths_root_down,
    const std::function<void(const CtrlMsg&)>& to_switch,
    const std::function<void(int, const CtrlMsg&)>& to_server) {
    CtrlMsg admit;
    admit.kind = CtrlMsg::Kind::Admit;
    std::vector<std::string> paths;
    std::vector<Token> toks;
    for (const auto& [p, rec] : paths_root_down) {
        if (cached_.count(p) || free_slots_.empty()) continue;
        HashKey key = hasher_.hash_level(Path::require(p));
        auto tok = tokens_.allocate(p, key);
        if (!tok) continue;
        uint32_t slot = *free_slots_.begin();
        free_slots_.erase(free_slots_.begin());
        CachedEntry e;
        e.key = key;
        e.token = *tok;
        e.slot = slot;
        cached_.emplace(p, e);
        auto pit = cached_.find(parent_of(p));
        if (pit != cached_.end()) pit->second.cached_children += 1;
        kind_hint_[p] = rec.kind;

        CtrlMsg::AdmitEntry entry;
        entry.path = p;
        entry.key = key;
        entry.token = *tok;
        entry.slot = slot;
        entry.record = rec;
        admit.entries.push_back(std::move(entry));
        paths.push_back(p);
        toks.push_back(*tok);
    }
    if (admit.entries.empty()) return;
    to_switch(admit);
    int n = env_.config().n_servers;
    for (size_t i = 0; i < paths.size(); ++i) {
        CtrlMsg m;
        m.kind = CtrlMsg::Kind::TokenInstall;
        m.paths = {paths[i]};
        m.tokens = {toks[i]};
        if (is_dir(paths[i])) {
            for (int s = 0; s < n; ++s) to_server(s, m);
        } else {
            to_server(route_owner(paths[i]), m);
        }
    }
}

}  // namespace fletchsim
