#include "fletchsim/metadata_server.hpp"

#include <algorithm>

namespace fletchsim {

namespace {

bool op_is_destructive(OpKind k) {
    return k == OpKind::Delete || k == OpKind::Rename || k == OpKind::Rmdir;
}

}  // namespace

MetadataServer::MetadataServer(SimEnv& env, int id, const PathHasher& hasher)
    : env_(env), id_(id), hasher_(hasher) {}

void MetadataServer::enqueue_service(std::function<void()> job) {
    SimTime service = static_cast<SimTime>(1e9 / env_.config().service_rate);
    SimTime start = std::max(env_.now(), busy_until_);
    busy_until_ = start + service;
    ++outstanding_jobs_;
    env_.after(busy_until_ - env_.now(), [this, job = std::move(job)]() {
        --outstanding_jobs_;
        job();
    });
}

void MetadataServer::on_request(Packet pkt) {
    if (!op_is_read(pkt.op.kind) && env_.write_blocked(pkt.op)) {
        pkt.was_parked = true;
        parked_.push_back(std::move(pkt));
        return;
    }
    enqueue_service([this, p = std::move(pkt)]() mutable {
        execute_request(std::move(p));
    });
}

void MetadataServer::wake_parked() {
    std::deque<Packet> still;
    while (!parked_.empty()) {
        Packet pkt = std::move(parked_.front());
        parked_.pop_front();
        if (env_.write_blocked(pkt.op)) {
            still.push_back(std::move(pkt));
        } else {
            enqueue_service([this, p = std::move(pkt)]() mutable {
                execute_request(std::move(p));
            });
        }
    }
    parked_ = std::move(still);
}

void MetadataServer::execute_request(Packet pkt) {
    // Blocking may have started while this request sat in the queue.
    if (!op_is_read(pkt.op.kind) && env_.write_blocked(pkt.op)) {
        pkt.was_parked = true;
        parked_.push_back(std::move(pkt));
        return;
    }

    env_.metrics().per_server_ops[id_] += 1;

    bool is_write = !op_is_read(pkt.op.kind);
    if (is_write) {
        const std::string target = pkt.op.target.str();
        Token t = tokens_.lookup(target, env_.now());
        if (t != kInvalidToken) {
            bool escalated = !pkt.lock_related;
            if (escalated) {
                // Cached since transit: the response must maintain the
                // cache through the sequence protocol.
                pkt.lock_related = true;
                if (op_is_destructive(pkt.op.kind)) {
                    pkt.mark_deleted = true;
                } else {
                    pkt.needs_value_update = true;
                }
                pkt.update_key = hasher_.hash_write_request(pkt.op.target);
                pkt.update_token = t;
                pkt.update_path = target;
            }
            // An entry (re)installed after this write left its client
            // may carry a fresh validation flag the transit never
            // dropped; the same holds for parked and escalated writes.
            bool reinstalled = tokens_.installed_at(target) > pkt.issued_at;
            if ((escalated || pkt.was_parked || reinstalled) &&
                !pkt.preinvalidated) {
                // Invalidate before mutating so no read can see the
                // pre-write record once the mutation lands.
                pkt.preinvalidated = true;
                Packet inv;
                inv.msg = MsgKind::CacheUpdate;
                inv.lock_related = true;
                inv.invalidate_only = true;
                inv.origin_server = id_;
                inv.update_key = pkt.update_key;
                inv.update_token = pkt.update_token;
                inv.update_path = pkt.update_path;
                inv.invalidate_for_tag = pkt.request_tag;
                held_writes_.emplace(pkt.request_tag, std::move(pkt));
                queue_lock_related(std::move(inv));
                return;
            }
        }
    }

    // Idempotent write replay: a retransmitted write must not mutate
    // twice, but still produces a full response.
    OpResult result;
    if (is_write) {
        auto it = replay_.find(pkt.client);
        if (it != replay_.end() && it->second.tag == pkt.request_tag) {
            result = it->second.result;
        } else {
            result = env_.execute_op(pkt.op, pkt.requester, id_);
            replay_[pkt.client] = {pkt.request_tag, result};
        }
    } else {
        result = env_.execute_op(pkt.op, pkt.requester, id_);
    }
    finish_request(std::move(pkt), result);
}

void MetadataServer::finish_request(Packet pkt, const OpResult& result) {
    const std::string target = pkt.op.target.str();
    bool multi_write = op_is_multi_path(pkt.op.kind) && !op_is_read(pkt.op.kind);

    // Multi-path writes refresh every cached descendant before the
    // requested path revalidates; each update is its own reliable
    // message, so the final response leaves last.
    if (multi_write && result.status == Status::Ok) {
        for (const Path& up : result.multi_updated) {
            std::string ups = up.str();
            if (ups == target) continue;
            Token t = env_.owner_token(ups);
            if (t == kInvalidToken) continue;
            const MetadataRecord* rec = env_.authoritative_record(ups);
            if (!rec) continue;
            Packet upd;
            upd.msg = MsgKind::CacheUpdate;
            upd.lock_related = true;
            upd.needs_value_update = true;
            upd.origin_server = id_;
            upd.status = Status::Ok;
            upd.update_key = hasher_.hash_write_request(up);
            upd.update_token = t;
            upd.update_path = ups;
            upd.update_record = *rec;
            upd.record_version = env_.path_version(ups);
            queue_lock_related(std::move(upd));
        }
    }

    pkt.msg = MsgKind::Response;
    pkt.status = result.status;
    pkt.record = result.record;
    pkt.listing = result.listing;
    pkt.origin_server = id_;
    pkt.record_path = target;
    pkt.record_version = env_.path_version(target);
    if (pkt.needs_value_update && result.status == Status::Ok) {
        const MetadataRecord* rec = env_.authoritative_record(target);
        if (rec) pkt.update_record = *rec;
    }
    attach_tokens(pkt);

    if (pkt.lock_related) {
        queue_lock_related(std::move(pkt));
    } else {
        env_.server_to_switch(std::move(pkt));
    }
}

void MetadataServer::attach_tokens(Packet& resp) {
    for (const Path& lvl : resp.op.target.levels()) {
        if (lvl.is_root()) continue;
        std::string s = lvl.str();
        Token t = tokens_.lookup(s, env_.now());
        if (t != kInvalidToken) resp.tokens_granted.push_back({s, t});
    }
}

void MetadataServer::queue_lock_related(Packet resp) {
    lock_queue_.push_back(std::move(resp));
    pump_lock_queue();
}

void MetadataServer::pump_lock_queue() {
    if (unacked_ || lock_queue_.empty()) return;
    Packet pkt = std::move(lock_queue_.front());
    lock_queue_.pop_front();
    pkt.seq = seq_;
    unacked_ = pkt;
    ++retransmit_gen_;
    arm_retransmit(retransmit_gen_);
    env_.server_to_switch(std::move(pkt));
}

void MetadataServer::arm_retransmit(uint64_t gen) {
    SimTime timeout = 4 * env_.config().lat_switch_server;
    env_.after(timeout, [this, gen]() {
        if (!unacked_ || gen != retransmit_gen_) return;
        env_.metrics().server_retransmissions += 1;
        Packet copy = *unacked_;
        ++retransmit_gen_;
        arm_retransmit(retransmit_gen_);
        env_.server_to_switch(std::move(copy));
    });
}

void MetadataServer::on_ack(uint8_t seq) {
    if (!unacked_ || seq != unacked_->seq) return;  // stale ACK
    uint64_t held_tag = unacked_->invalidate_for_tag;
    bool was_invalidate = unacked_->invalidate_only;
    unacked_.reset();
    ++retransmit_gen_;
    seq_ = static_cast<uint8_t>(seq_ + 1);
    if (was_invalidate) {
        auto it = held_writes_.find(held_tag);
        if (it != held_writes_.end()) {
            Packet w = std::move(it->second);
            held_writes_.erase(it);
            enqueue_service([this, p = std::move(w)]() mutable {
                execute_request(std::move(p));
            });
        }
    }
    pump_lock_queue();
}

void MetadataServer::on_control(CtrlMsg msg) {
    switch (msg.kind) {
        case CtrlMsg::Kind::FetchAndBlock: {
            for (const auto& p : msg.paths) blocked_.insert(p);
            enqueue_service([this, m = std::move(msg)]() {
                CtrlMsg reply;
                reply.kind = CtrlMsg::Kind::FetchReply;
                reply.xid = m.xid;
                reply.server = id_;
                reply.paths = m.paths;
                for (const auto& p : m.paths) {
                    const MetadataRecord* rec =
                        shard_.find(Path::require(p));
                    reply.statuses.push_back(rec ? Status::Ok
                                                 : Status::NotFound);
                    reply.records.push_back(rec ? *rec : MetadataRecord{});
                }
                env_.ctrl_reply(std::move(reply));
            });
            break;
        }
        case CtrlMsg::Kind::Unblock: {
            for (const auto& p : msg.paths) blocked_.erase(p);
            env_.wake_blocked_writes();
            break;
        }
        case CtrlMsg::Kind::TokenInstall: {
            for (size_t i = 0; i < msg.paths.size(); ++i)
                tokens_.put(msg.paths[i], msg.tokens[i], kNever, env_.now());
            break;
        }
        case CtrlMsg::Kind::TokenRemove: {
            for (const auto& p : msg.paths) tokens_.erase(p);
            break;
        }
        default:
            env_.violation("bad_server_control");
    }
}

}  // namespace fletchsim
