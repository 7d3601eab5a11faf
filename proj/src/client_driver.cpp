#include "fletchsim/client_driver.hpp"

namespace fletchsim {

ClientDriver::ClientDriver(SimEnv& env, int id, const PathHasher& hasher,
                           NextOpFn next_op, DoneFn on_done)
    : env_(env),
      id_(id),
      hasher_(hasher),
      next_op_(std::move(next_op)),
      on_done_(std::move(on_done)) {}

void ClientDriver::start() { issue_next(); }

void ClientDriver::issue_next() {
    auto op = next_op_(id_);
    if (!op) return;  // trace exhausted for this client
    sends_ = 0;
    pending_ = build_packet(*op);
    env_.metrics().issued += 1;
    if (env_.metrics().first_issue == kNever)
        env_.metrics().first_issue = env_.now();
    sent_at_ = env_.now();
    send_current();
}

Packet ClientDriver::build_packet(const MetaOp& op) {
    Packet pkt;
    pkt.msg = MsgKind::Request;
    pkt.client = id_;
    pkt.request_tag = (static_cast<uint64_t>(id_) << 32) | next_tag_++;
    pkt.op = op;
    pkt.requester = principal;
    pkt.issued_at = env_.now();

    SimTime now = env_.now();
    if (op_is_read(op.kind) && !op_is_multi_path(op.kind)) {
        pkt.level_keys = hasher_.hash_read_request(op.target);
        pkt.level_tokens.reserve(pkt.level_keys.size());
        for (const Path& lvl : op.target.levels())
            pkt.level_tokens.push_back(tokens_.lookup(lvl.str(), now));
    } else {
        // Writes and multi-path reads hash the complete path without
        // partitioning, plus the prefix key the lock stage consults.
        pkt.level_keys = {hasher_.hash_write_request(op.target)};
        pkt.level_tokens = {tokens_.lookup(op.target.str(), now)};
        size_t d = op.target.depth();
        if (d >= 1) {
            if (env_.config().lock_mode == LockMode::Single) {
                pkt.write_lock_key = hasher_.hash_level(op.target.level(1));
            } else if (d > 8) {
                pkt.write_lock_key = hasher_.hash_level(op.target.level(8));
            } else {
                pkt.write_lock_key = pkt.level_keys[0];
            }
        }
    }
    return pkt;
}

void ClientDriver::send_current() {
    Packet copy = *pending_;
    arm_timeout();
    env_.client_to_switch(std::move(copy));
}

void ClientDriver::arm_timeout() {
    // 8x the mean round trip (including a loss-recovery allowance),
    // doubling per retry; the retransmission itself is identical.
    const SimConfig& cfg = env_.config();
    SimTime rtt = 2 * (cfg.lat_client_switch + cfg.lat_switch_server) +
                  static_cast<SimTime>(1e9 / cfg.service_rate) +
                  4 * cfg.switch_traversal + 4 * cfg.lat_switch_server;
    uint64_t gen = ++timeout_gen_;
    SimTime wait = 8 * rtt;
    for (uint32_t i = 0; i < sends_ && i < 6; ++i) wait *= 2;
    env_.after(wait, [this, gen]() {
        if (!pending_ || gen != timeout_gen_) return;
        env_.metrics().retransmissions += 1;
        ++sends_;
        send_current();
    });
}

void ClientDriver::on_response(Packet resp) {
    if (!pending_ || resp.request_tag != pending_->request_tag)
        return;  // late duplicate of a finished request
    ++timeout_gen_;

    SimTime latency = env_.now() - sent_at_;
    SimTime expiry = env_.now() + env_.config().client_token_ttl;
    for (const auto& [path, token] : resp.tokens_granted)
        tokens_.put(path, token, expiry);

    Metrics& m = env_.metrics();
    m.completed += 1;
    m.last_completion = env_.now();
    bool read = op_is_read(pending_->op.kind);
    if (read) {
        m.reads_completed += 1;
        if (m.collect_latencies) m.read_latencies.push_back(latency);
    } else {
        m.writes_completed += 1;
        if (m.collect_latencies) m.write_latencies.push_back(latency);
    }
    if (resp.status != Status::Ok) m.errors_returned += 1;
    m.recirc_path += resp.recirc_path;
    m.recirc_lock += resp.recirc_lock;
    m.recirc_cross += resp.recirc_cross;

    if (on_done_) on_done_(resp, latency);
    pending_.reset();
    issue_next();
}

}  // namespace fletchsim
