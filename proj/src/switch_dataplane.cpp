#include "fletchsim/switch_dataplane.hpp"

#include <algorithm>

namespace fletchsim {

namespace {

// Register array ids for the fidelity checker. Lock arrays use 1..8;
// the MAT is table memory, not a register array, and is exempt.
constexpr uint32_t kArrValidation = 10;
constexpr uint32_t kArrValues = 11;
constexpr uint32_t kArrFreq = 12;
constexpr uint32_t kArrCmsBase = 13;  // rows 13..15
constexpr uint32_t kArrSeq = 16;
constexpr uint32_t kArrWritePending = 17;

bool op_is_destructive(OpKind k) {
    return k == OpKind::Delete || k == OpKind::Rename || k == OpKind::Rmdir;
}

}  // namespace

SwitchDataplane::SwitchDataplane(SimEnv& env, const PathHasher& hasher,
                                 const ConsistentHashRing& ring)
    : env_(env),
      hasher_(hasher),
      ring_(ring),
      capacity_(env.config().cache_capacity),
      values_(capacity_),
      valid_(capacity_, 0),
      freq_(capacity_, 0),
      slot_path_(capacity_),
      slot_version_(capacity_, 0),
      slot_used_(capacity_, 0),
      write_pending_(capacity_, 0),
      locks_([&env](const char* what) { env.violation(what); }),
      cms_(3, 65536),
      seq_expected_(env.config().n_servers, 0),
      single_lock_(env.config().lock_mode == LockMode::Single),
      traversal_ns_(env.config().switch_traversal) {
    root_record_.kind = NodeKind::Directory;
    root_record_.mode = 0755;
    root_record_.owner_id = 0;
    root_record_.group_id = 0;
    root_record_.size = 0;
    root_record_.replication = 0;
}

SwitchDataplane::SlotView SwitchDataplane::slot_view(uint32_t slot) const {
    SlotView v;
    if (slot >= capacity_ || !slot_used_[slot]) return v;
    v.in_use = true;
    v.valid = valid_[slot] != 0;
    v.path = slot_path_[slot];
    v.record = values_[slot];
    v.frequency = freq_[slot];
    return v;
}

void SwitchDataplane::touch(uint32_t array_id, uint32_t slot) {
    if (!env_.config().check_fidelity) return;
    for (const auto& [a, s] : fidelity_.touches) {
        if (a == array_id && s != slot) {
            env_.violation("register_multi_access");
            return;
        }
        if (a == array_id && s == slot) return;  // coalesced access
    }
    fidelity_.touches.emplace_back(array_id, slot);
}

void SwitchDataplane::end_traversal() { fidelity_.clear(); }

LockIndex SwitchDataplane::write_lock(const Packet& pkt) const {
    size_t d = pkt.op.target.depth();
    uint32_t array = single_lock_ ? 1
                     : static_cast<uint32_t>(d < kLockArrays ? d : kLockArrays);
    return {array, static_cast<uint32_t>(pkt.write_lock_key & 0xFFFF)};
}

void SwitchDataplane::lock_delta(const Packet& pkt, size_t from, size_t to,
                                 int sign) {
    if (from > to) return;
    if (single_lock_) {
        LockIndex li{1, static_cast<uint32_t>(pkt.level_keys[1] & 0xFFFF)};
        touch(li.array, li.slot);
        locks_.add(li.array, li.slot, sign * static_cast<int>(to - from + 1));
        return;
    }
    size_t shallow_to = std::min<size_t>(to, kLockArrays - 1);
    for (size_t lvl = from; lvl <= shallow_to; ++lvl) {
        LockIndex li = lock_index(lvl, pkt.level_keys, false);
        touch(li.array, li.slot);
        locks_.add(li.array, li.slot, sign);
    }
    if (to >= kLockArrays) {
        // Levels 8..to share one counter via the level-8 key; a single
        // access applies the whole delta.
        size_t deep_from = std::max<size_t>(from, kLockArrays);
        int n = static_cast<int>(to - deep_from + 1);
        LockIndex li = lock_index(kLockArrays, pkt.level_keys, false);
        touch(li.array, li.slot);
        locks_.add(li.array, li.slot, sign * n);
    }
}

void SwitchDataplane::on_client_packet(Packet pkt) {
    if (env_.config().scheme == Scheme::NoCache) {
        forward_to_owner(std::move(pkt));
        return;
    }
    // Requests land on the client-facing pipeline; lock counters live in
    // the designated ingress pipeline, so redirect across first.
    pkt.redirected = true;
    pkt.recirc_cross += 1;
    env_.after(traversal_ns_, [this, p = std::move(pkt)]() mutable {
        ingress_entry(std::move(p));
    });
}

void SwitchDataplane::ingress_entry(Packet pkt) {
    env_.trace_event(pkt, "ingress");
    if (op_is_read(pkt.op.kind)) {
        if (op_is_multi_path(pkt.op.kind)) {
            // Multi-path reads are served by the servers outright.
            forward_to_owner(std::move(pkt));
            return;
        }
        read_arrival(std::move(pkt));
    } else {
        write_arrival(std::move(pkt));
    }
}

void SwitchDataplane::read_arrival(Packet pkt) {
    env_.metrics().single_path_reads += 1;
    size_t d = pkt.op.target.depth();
    if (d == 0) {
        // The root is permanently cached and valid.
        env_.metrics().mat_hits += 1;
        pkt.switch_hit = true;
        if (!permission_check(root_record_, pkt.requester, Access::Read)) {
            respond_error(std::move(pkt), Status::PermissionDenied);
        } else {
            env_.metrics().served_from_switch += 1;
            pkt.record_path = "/";
            pkt.record_version = env_.path_version("/");
            finish_read(std::move(pkt), root_record_);
        }
        end_traversal();
        return;
    }

    auto slot = mat_.lookup(pkt.level_keys[d], pkt.level_tokens[d]);
    if (!slot) {
        cms_update_and_check(pkt);
        forward_to_owner(std::move(pkt));
        end_traversal();
        return;
    }

    pkt.switch_hit = true;
    env_.metrics().mat_hits += 1;
    lock_delta(pkt, 1, d, +1);
    pkt.held_from = 1;
    pkt.held_to = static_cast<int>(d);

    if (!permission_check(root_record_, pkt.requester, Access::Traverse)) {
        lock_delta(pkt, 1, d, -1);
        pkt.held_to = 0;
        respond_error(std::move(pkt), Status::PermissionDenied);
        end_traversal();
        return;
    }
    pkt.cursor = 1;
    resolve_traversal(std::move(pkt));
}

// One pipeline pass of per-level resolution: releases the previous
// level's lock, then checks this level's validation flag and record.
void SwitchDataplane::resolve_traversal(Packet pkt) {
    env_.trace_event(pkt, "resolve");
    size_t i = pkt.cursor;
    size_t d = pkt.op.target.depth();

    if (static_cast<size_t>(pkt.held_from) == i - 1 && i > 1) {
        lock_delta(pkt, i - 1, i - 1, -1);
        pkt.held_from = static_cast<int>(i);
    }

    auto slot = mat_.lookup(pkt.level_keys[i], pkt.level_tokens[i]);
    if (!slot || valid_[*slot] == 0) {
        if (slot) touch(kArrValidation, *slot);
        // Invalid or unresolvable level: the server finishes this read;
        // lock releases ride back on its response.
        pkt.lock_related = true;
        forward_to_owner(std::move(pkt));
        end_traversal();
        return;
    }

    uint32_t s = *slot;
    touch(kArrValidation, s);
    touch(kArrValues, s);
    const MetadataRecord& rec = values_[s];

    if (env_.config().check_soundness) {
        SimTime until = env_.version_valid_until(slot_path_[s], slot_version_[s]);
        if (until <= pkt.issued_at) env_.violation("validation_soundness");
    }

    if (rec.deleted) {
        lock_delta(pkt, i, d, -1);
        pkt.held_to = 0;
        respond_error(std::move(pkt), Status::NotFound);
        end_traversal();
        return;
    }

    if (i < d) {
        if (rec.kind != NodeKind::Directory) {
            lock_delta(pkt, i, d, -1);
            pkt.held_to = 0;
            respond_error(std::move(pkt), Status::NotADirectory);
            end_traversal();
            return;
        }
        if (!permission_check(rec, pkt.requester, Access::Traverse)) {
            lock_delta(pkt, i, d, -1);
            pkt.held_to = 0;
            respond_error(std::move(pkt), Status::PermissionDenied);
            end_traversal();
            return;
        }
        pkt.resolved_modes.emplace_back(slot_path_[s], rec.mode);
        pkt.cursor = i + 1;
        pkt.recirc_path += 1;
        end_traversal();
        env_.after(traversal_ns_, [this, p = std::move(pkt)]() mutable {
            resolve_traversal(std::move(p));
        });
        return;
    }

    // Target level.
    if (!permission_check(rec, pkt.requester, Access::Read)) {
        lock_delta(pkt, d, d, -1);
        pkt.held_to = 0;
        respond_error(std::move(pkt), Status::PermissionDenied);
        end_traversal();
        return;
    }
    touch(kArrFreq, s);
    freq_[s] += 1;  // direct access only, ancestors excluded
    pkt.resolved_modes.emplace_back(slot_path_[s], rec.mode);
    MetadataRecord out = rec;
    pkt.record_path = slot_path_[s];
    pkt.record_version = slot_version_[s];
    lock_delta(pkt, d, d, -1);
    pkt.held_to = 0;
    env_.metrics().served_from_switch += 1;
    finish_read(std::move(pkt), out);
    end_traversal();
}

void SwitchDataplane::write_arrival(Packet pkt) {
    size_t d = pkt.op.target.depth();
    if (d == 0) {
        // Root writes carry no cache interaction; the server refuses them.
        forward_to_owner(std::move(pkt));
        return;
    }
    auto slot = mat_.lookup(pkt.level_keys.back(), pkt.level_tokens.back());
    if (!slot) {
        forward_to_owner(std::move(pkt));
        return;
    }
    // Cache status resolved; one recirculation reaches the lock stage.
    pkt.recirc_lock += 1;
    env_.after(traversal_ns_, [this, p = std::move(pkt)]() mutable {
        write_lock_pass(std::move(p));
    });
}

void SwitchDataplane::write_lock_pass(Packet pkt) {
    env_.trace_event(pkt, "lock");
    LockIndex li = write_lock(pkt);
    touch(li.array, li.slot);
    if (locks_.get(li.array, li.slot) != 0) {
        // The packet recirculates once per traversal while it waits; the
        // simulation samples the counter at widening gaps and accounts
        // for the traversals in between.
        uint32_t gap = pkt.lock_sample_gap;
        pkt.recirc_lock += gap;
        if (pkt.lock_sample_gap < 8) pkt.lock_sample_gap *= 2;
        if (!pkt.starvation_flagged &&
            pkt.recirc_lock > env_.config().starvation_recirc_threshold) {
            pkt.starvation_flagged = true;
            env_.metrics().starvation_warnings += 1;
        }
        end_traversal();
        env_.after(traversal_ns_ * gap, [this, p = std::move(pkt)]() mutable {
            write_lock_pass(std::move(p));
        });
        return;
    }

    // Re-check the table: the entry may have been evicted while waiting.
    auto slot = mat_.lookup(pkt.level_keys.back(), pkt.level_tokens.back());
    if (!slot) {
        end_traversal();
        forward_to_owner(std::move(pkt));
        return;
    }
    touch(kArrValidation, *slot);
    valid_[*slot] = 0;
    touch(kArrWritePending, *slot);
    write_pending_[*slot] += 1;
    pkt.lock_related = true;
    if (op_is_destructive(pkt.op.kind)) {
        pkt.mark_deleted = true;
    } else {
        pkt.needs_value_update = true;
    }
    pkt.update_key = pkt.level_keys.back();
    pkt.update_token = pkt.level_tokens.back();
    pkt.update_path = pkt.op.target.str();
    end_traversal();
    forward_to_owner(std::move(pkt));
}

void SwitchDataplane::forward_to_owner(Packet pkt) {
    int owner = ring_.owner_of_path(pkt.op.target.str());
    pkt.origin_server = owner;
    env_.switch_to_server(owner, std::move(pkt));
}

void SwitchDataplane::respond_error(Packet pkt, Status s) {
    pkt.msg = MsgKind::Response;
    pkt.status = s;
    pkt.record.reset();
    int client = pkt.client;
    env_.switch_to_client(client, std::move(pkt));
}

void SwitchDataplane::finish_read(Packet pkt, const MetadataRecord& rec) {
    pkt.msg = MsgKind::Response;
    pkt.status = Status::Ok;
    pkt.record = rec;
    int client = pkt.client;
    env_.switch_to_client(client, std::move(pkt));
}

void SwitchDataplane::cms_update_and_check(const Packet& pkt) {
    HashKey key = pkt.level_keys.back();
    for (uint32_t r = 0; r < cms_.rows(); ++r)
        touch(kArrCmsBase + r, sketch_row_slot(key, r, cms_.width()));
    uint32_t est = cms_.update(key);
    const std::string path = pkt.op.target.str();
    if (est > env_.config().cms_threshold && !pending_reports_.count(path)) {
        pending_reports_.insert(path);
        env_.metrics().hot_reports += 1;
        env_.hot_report(path, key);
    }
}

void SwitchDataplane::on_server_packet(Packet pkt) {
    env_.trace_event(pkt, "server_resp");
    if (!pkt.lock_related) {
        if (pkt.msg == MsgKind::Response)
            env_.switch_to_client(pkt.client, std::move(pkt));
        return;
    }

    int server = pkt.origin_server;
    uint8_t expected = seq_expected_[server];
    touch(kArrSeq, static_cast<uint32_t>(server));
    uint8_t diff = static_cast<uint8_t>(expected - pkt.seq);
    if (pkt.seq != expected) {
        if (diff >= 1 && diff < 128) {
            // Duplicate of an already-applied response: suppress the
            // retransmission, apply nothing.
            env_.metrics().dup_responses_suppressed += 1;
            env_.ack_to_server(server, pkt.seq);
        } else {
            env_.violation("seq_ahead_of_expected");
        }
        end_traversal();
        return;
    }
    seq_expected_[server] = static_cast<uint8_t>(expected + 1);

    // Release the locks this response settles (forwarded reads).
    if (pkt.held_from <= pkt.held_to) {
        lock_delta(pkt, static_cast<size_t>(pkt.held_from),
                   static_cast<size_t>(pkt.held_to), -1);
        pkt.held_to = 0;
    }

    if (pkt.invalidate_only) {
        auto slot = mat_.lookup(pkt.update_key, pkt.update_token);
        if (slot) {
            touch(kArrValidation, *slot);
            valid_[*slot] = 0;
            touch(kArrWritePending, *slot);
            write_pending_[*slot] += 1;
        }
        env_.ack_to_server(server, pkt.seq);
        end_traversal();
        return;
    }

    if (pkt.needs_value_update || pkt.mark_deleted ||
        pkt.msg == MsgKind::CacheUpdate) {
        auto slot = mat_.lookup(pkt.update_key, pkt.update_token);
        if (slot) {
            uint32_t s = *slot;
            // A response that raced an eviction/readmission can carry
            // state older than the slot's; it must not roll it back.
            bool stale = pkt.record_version < slot_version_[s];
            if (pkt.status == Status::Ok && !stale) {
                if (pkt.mark_deleted) {
                    touch(kArrValues, s);
                    values_[s].deleted = true;
                    slot_version_[s] = pkt.record_version;
                } else if (pkt.needs_value_update) {
                    touch(kArrValues, s);
                    values_[s] = pkt.update_record;
                    slot_version_[s] = pkt.record_version;
                }
            }
            // A write completion revalidates regardless of outcome, but
            // only once no other write to the slot is still in flight.
            // Descendant updates of a multi-path write leave the flag
            // untouched; their subtree root is still invalid.
            if (pkt.msg == MsgKind::Response) {
                touch(kArrWritePending, s);
                if (write_pending_[s] > 0) write_pending_[s] -= 1;
                if (write_pending_[s] == 0 && !stale) {
                    touch(kArrValidation, s);
                    valid_[s] = 1;
                }
            }
        }
    }

    uint8_t seq = pkt.seq;
    if (pkt.msg == MsgKind::Response) {
        env_.switch_to_client(pkt.client, std::move(pkt));
    }
    env_.ack_to_server(server, seq);
    end_traversal();
}

void SwitchDataplane::apply_control(const CtrlMsg& msg) {
    switch (msg.kind) {
        case CtrlMsg::Kind::Admit: {
            for (const auto& e : msg.entries) {
                if (e.slot >= capacity_ || slot_used_[e.slot]) {
                    env_.violation("admit_slot_occupied");
                    continue;
                }
                mat_.put(e.key, e.token, e.slot);
                values_[e.slot] = e.record;
                valid_[e.slot] = 1;
                freq_[e.slot] = 0;
                write_pending_[e.slot] = 0;
                slot_used_[e.slot] = 1;
                slot_path_[e.slot] = e.path;
                slot_version_[e.slot] = env_.path_version(e.path);
                pending_reports_.erase(e.path);
            }
            break;
        }
        case CtrlMsg::Kind::Evict: {
            for (const auto& [key, token] : msg.kt) {
                auto slot = mat_.lookup(key, token);
                if (!slot) {
                    env_.violation("evict_unknown_entry");
                    continue;
                }
                mat_.erase(key, token);
                slot_used_[*slot] = 0;
                valid_[*slot] = 0;
                freq_[*slot] = 0;
                write_pending_[*slot] = 0;
                slot_path_[*slot].clear();
            }
            break;
        }
        case CtrlMsg::Kind::PullFreq:
        case CtrlMsg::Kind::PullFreqAndReset: {
            CtrlMsg reply;
            reply.kind = CtrlMsg::Kind::FreqReply;
            reply.xid = msg.xid;
            reply.paths = msg.paths;
            reply.kt = msg.kt;
            for (const auto& [key, token] : msg.kt) {
                auto slot = mat_.lookup(key, token);
                reply.counts.push_back(slot ? freq_[*slot] : 0);
            }
            env_.switch_ctrl_reply(std::move(reply));
            if (msg.kind == CtrlMsg::Kind::PullFreqAndReset) {
                cms_.reset();
                std::fill(freq_.begin(), freq_.end(), 0);
                pending_reports_.clear();
                env_.metrics().sketch_resets += 1;
            }
            break;
        }
        case CtrlMsg::Kind::ResetSketch: {
            cms_.reset();
            std::fill(freq_.begin(), freq_.end(), 0);
            pending_reports_.clear();
            env_.metrics().sketch_resets += 1;
            break;
        }
        default:
            env_.violation("bad_switch_control");
    }
}

}  // namespace fletchsim
