// Copyright 2026 The efl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "efl/orchestration.hpp"

#include <condition_variable>
#include <cstdio>
#include <deque>
#include <mutex>
#include <numeric>
#include <thread>

#include "efl/rng.hpp"

namespace efl {

namespace {

Message make_msg(MsgKind kind, uint64_t round, NodeId sender, MessageBody body) {
    Message m;
    m.kind = kind;
    m.round = round;
    m.sender = sender;
    m.body = std::move(body);
    return m;
}

void send_msg(SecureChannel& ch, const Message& m) {
    Bytes enc = encode(m);
    ch.send(enc);
}

Message recv_msg(SecureChannel& ch) { return decode(ch.recv()); }

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// aborted-report helper for infrastructure failures
TrainReport failure_report(AbortCode code, const std::string& detail) {
    TrainReport r;
    r.aborted = true;
    r.abort_code = uint16_t(code);
    r.abort_detail = detail;
    return r;
}

AbortCode code_for(const ChannelError& e) {
    return e.fault == ChannelFault::Timeout ? AbortCode::Timeout : AbortCode::Internal;
}

struct Event {
    size_t conn = 0;
    std::optional<Message> msg;
    std::exception_ptr error;
    std::unique_ptr<SecureChannel> new_channel;  // from the acceptor
};

class EventQueue {
public:
    void push(Event e) {
        {
            std::lock_guard lock(mu_);
            q_.push_back(std::move(e));
        }
        cv_.notify_one();
    }

    std::optional<Event> pop(std::chrono::milliseconds timeout) {
        std::unique_lock lock(mu_);
        if (!cv_.wait_for(lock, timeout, [&] { return !q_.empty(); })) return std::nullopt;
        Event e = std::move(q_.front());
        q_.pop_front();
        return e;
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Event> q_;
};

struct PsConnection {
    std::unique_ptr<SecureChannel> channel;
    std::thread reader;
    std::optional<NodeId> peer;
    bool completed = false;
};

void export_params(const ModelParams& params, const std::string& path) {
    Bytes data = encode_params(params);
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!f) throw IoError("cannot open export path: " + path);
    if (std::fwrite(data.data(), 1, data.size(), f.get()) != data.size())
        throw IoError("short write: " + path);
}

// ---------------------------------------------------------------------------
// Parameter server
// ---------------------------------------------------------------------------

// The acceptor hands fully handshaked channels to the event loop one by one,
// so the server can start serving (and acking the chief) while later peers
// are still connecting. Connection order never affects training math.
TrainReport ps_serve(const RunConfig& config,
                     const std::function<std::unique_ptr<SecureChannel>()>& accept_next,
                     size_t expected_conns, const RoundObserver& observer) {
    TrainReport report;
    EventQueue queue;
    std::vector<PsConnection> conns;
    conns.reserve(expected_conns);

    std::thread acceptor([&queue, &accept_next, expected_conns] {
        for (size_t i = 0; i < expected_conns; ++i) {
            Event e;
            try {
                e.new_channel = accept_next();
            } catch (...) {
                e.conn = SIZE_MAX;
                e.error = std::current_exception();
                queue.push(std::move(e));
                return;
            }
            queue.push(std::move(e));
        }
    });

    auto add_connection = [&](std::unique_ptr<SecureChannel> ch) {
        size_t i = conns.size();
        conns.emplace_back();
        conns[i].channel = std::move(ch);
        report.handshake_ms += conns[i].channel->handshake_millis();
        report.handshake_count += 1;
        SecureChannel* raw = conns[i].channel.get();
        conns[i].reader = std::thread([i, raw, &queue] {
            try {
                for (;;) {
                    Message m = recv_msg(*raw);
                    queue.push(Event{i, std::move(m), nullptr, nullptr});
                }
            } catch (...) {
                queue.push(Event{i, std::nullopt, std::current_exception(), nullptr});
            }
        });
    };

    auto shutdown = [&] {
        for (auto& c : conns) c.channel->close();
        if (acceptor.joinable()) acceptor.join();
        for (auto& c : conns) {
            if (c.reader.joinable()) c.reader.join();
        }
        for (auto& c : conns) {
            report.traffic.total_tx += c.channel->bytes_tx();
            report.traffic.total_rx += c.channel->bytes_rx();
        }
    };

    std::optional<PsMachine> machine;
    if (config.mode == Topology::HFL)
        machine.emplace(config.dlrm, config.num_workers, config.rounds);

    size_t chief_conn = SIZE_MAX;
    std::map<uint32_t, size_t> worker_conn;
    double t_broadcast = now_ms();

    auto route = [&](const std::vector<PsOutbound>& out) {
        for (const PsOutbound& o : out) {
            if (o.to_all_workers) {
                for (const auto& [idx, conn] : worker_conn) {
                    try {
                        send_msg(*conns[conn].channel, o.msg);
                    } catch (const ChannelError&) {
                        // the peer will surface as a reader error next
                    }
                }
            } else {
                auto it = worker_conn.find(o.worker);
                if (it != worker_conn.end()) send_msg(*conns[it->second].channel, o.msg);
            }
        }
    };

    auto fail = [&](AbortCode code, const std::string& detail) {
        // best-effort abort notice to everyone, including the chief
        Message abort_msg = make_msg(MsgKind::Abort, machine ? machine->round() : 0,
                                     NodeId{NodeRole::ParameterServer, 0},
                                     AbortBody{uint16_t(code), detail});
        for (auto& c : conns) {
            if (!c.channel->open()) continue;
            try {
                send_msg(*c.channel, abort_msg);
            } catch (const ChannelError&) {
            }
        }
        report.aborted = true;
        report.abort_code = uint16_t(code);
        report.abort_detail = detail;
        shutdown();
        return report;
    };

    for (;;) {
        auto ev = queue.pop(config.io_timeout);
        if (!ev) return fail(AbortCode::Timeout, "no event within the i/o timeout");
        if (ev->new_channel) {
            add_connection(std::move(ev->new_channel));
            continue;
        }
        if (ev->error) {
            if (ev->conn != SIZE_MAX && conns[ev->conn].completed)
                continue;  // benign post-completion close
            try {
                std::rethrow_exception(ev->error);
            } catch (const ChannelError& e) {
                return fail(code_for(e), e.what());
            } catch (const std::exception& e) {
                return fail(AbortCode::BadMessage, e.what());
            }
        }
        const Message& msg = *ev->msg;
        if (msg.kind == MsgKind::ShardTransfer) report.traffic.shard_transfer_frames += 1;

        // connection/sender consistency: a channel speaks for one node
        if (conns[ev->conn].peer && !(*conns[ev->conn].peer == msg.sender))
            return fail(AbortCode::UnknownNode, "sender does not match connection identity");

        if (!machine) {
            // SDT: the first act must be the chief's configuration
            if (msg.kind == MsgKind::ConfigTransfer &&
                msg.sender.role == NodeRole::Chief) {
                const auto& body = std::get<ConfigTransferBody>(msg.body);
                // the acceptor is already sized for config.num_workers peers
                if (body.num_workers != config.num_workers)
                    return fail(AbortCode::BadMessage,
                                "chief expects " + std::to_string(body.num_workers) +
                                    " workers, server accepts " +
                                    std::to_string(config.num_workers));
                try {
                    machine.emplace(body.dlrm, body.num_workers, body.rounds);
                } catch (const ConfigError& e) {
                    return fail(AbortCode::BadMessage,
                                std::string("chief config rejected: ") + e.what());
                }
                chief_conn = ev->conn;
                conns[ev->conn].peer = msg.sender;
                send_msg(*conns[ev->conn].channel,
                         make_msg(MsgKind::RegisterAck, 0,
                                  NodeId{NodeRole::ParameterServer, 0},
                                  RegisterAckBody{0}));
                continue;
            }
            return fail(AbortCode::BadMessage, "message before configuration");
        }
        if (msg.kind == MsgKind::ConfigTransfer)
            return fail(AbortCode::BadMessage, "duplicate configuration");
        if (ev->conn == chief_conn)
            return fail(AbortCode::BadMessage, "unexpected chief message mid-run");
        if (msg.kind == MsgKind::Register && worker_conn.count(msg.sender.index) &&
            worker_conn[msg.sender.index] != ev->conn)
            return fail(AbortCode::DuplicateIndex,
                        "two connections claim worker " + std::to_string(msg.sender.index));

        PsStepResult res = machine->on_message(msg);
        if (!res.aborted && msg.kind == MsgKind::Register) {
            conns[ev->conn].peer = msg.sender;
            worker_conn[msg.sender.index] = ev->conn;
        }
        if (!res.aborted && msg.kind == MsgKind::TrainComplete)
            conns[ev->conn].completed = true;

        if (res.aborted) {
            route(res.out);  // carries the Abort message to workers
            report.aborted = true;
            report.abort_code = uint16_t(res.abort_code);
            report.abort_detail = res.abort_detail;
            // also tell the chief, if any
            if (chief_conn != SIZE_MAX && conns[chief_conn].channel->open()) {
                try {
                    send_msg(*conns[chief_conn].channel,
                             make_msg(MsgKind::Abort, machine->round(),
                                      NodeId{NodeRole::ParameterServer, 0},
                                      AbortBody{uint16_t(res.abort_code),
                                                res.abort_detail}));
                } catch (const ChannelError&) {
                }
            }
            shutdown();
            return report;
        }

        bool sent_broadcast = false;
        for (const auto& o : res.out)
            if (o.msg.kind == MsgKind::ModelBroadcast) sent_broadcast = true;

        if (res.round_done) {
            double dur = now_ms() - t_broadcast;
            report.rows.push_back(
                RoundRow{res.stats.round, res.stats.loss, res.stats.accuracy, dur});
            if (observer) observer(res.stats, machine->params());
        }
        route(res.out);
        if (sent_broadcast) t_broadcast = now_ms();

        if (res.finished) {
            report.final_digest = params_digest(machine->params());
            if (config.mode == Topology::SDT && chief_conn != SIZE_MAX) {
                TrainCompleteBody done;
                done.params_digest = report.final_digest;
                done.has_params = 1;
                done.params = machine->params();
                try {
                    send_msg(*conns[chief_conn].channel,
                             make_msg(MsgKind::TrainComplete, machine->round(),
                                      NodeId{NodeRole::ParameterServer, 0},
                                      std::move(done)));
                } catch (const ChannelError& e) {
                    return fail(code_for(e), e.what());
                }
            }
            if (!config.export_path.empty())
                export_params(machine->params(), config.export_path);
            shutdown();
            return report;
        }
    }
}

// ---------------------------------------------------------------------------
// Worker
// ---------------------------------------------------------------------------

struct WorkerParams {
    DlrmConfig dlrm;
    uint64_t rounds = 0;
    uint32_t local_batch = 0;
    uint16_t eval_permille = 0;
    uint64_t run_seed = 0;
    uint32_t worker_index = 0;
};

TrainReport worker_loop(SecureChannel& ch, const WorkerParams& wp,
                        const std::vector<Record>& shard) {
    wp.dlrm.validate();
    if (shard.empty()) throw ConfigError("worker shard is empty");
    if (wp.local_batch == 0) throw ConfigError("local batch size must be positive");

    TrainReport report;
    report.handshake_ms = ch.handshake_millis();
    report.handshake_count = 1;

    const size_t eval_n = shard.size() * wp.eval_permille / 1000;
    const size_t train_n = shard.size() - eval_n;
    if (train_n == 0) throw ConfigError("no training rows after the eval split");
    std::vector<Record> eval_set(shard.begin() + long(train_n), shard.end());

    // fixed cyclic schedule: one shuffle up front, replayable from the seed
    std::vector<uint32_t> order(train_n);
    std::iota(order.begin(), order.end(), 0u);
    Rng schedule_rng(mix_seed(wp.run_seed, wp.worker_index));
    for (size_t i = train_n; i > 1; --i)
        std::swap(order[i - 1], order[schedule_rng.next_below(i)]);
    const uint32_t batch_size = uint32_t(std::min<uint64_t>(wp.local_batch, train_n));
    size_t cursor = 0;

    const NodeId self{NodeRole::Worker, wp.worker_index};
    send_msg(ch, make_msg(MsgKind::Register, 0, self, RegisterBody{}));
    Message ack = recv_msg(ch);
    if (ack.kind == MsgKind::Abort) {
        const auto& body = std::get<AbortBody>(ack.body);
        return failure_report(AbortCode(body.code), body.detail);
    }
    if (ack.kind != MsgKind::RegisterAck)
        return failure_report(AbortCode::BadMessage, "expected registration ack");

    double last_step_ms = 0;
    for (;;) {
        Message m = recv_msg(ch);
        if (m.kind == MsgKind::Abort) {
            const auto& body = std::get<AbortBody>(m.body);
            report.aborted = true;
            report.abort_code = body.code;
            report.abort_detail = body.detail;
            return report;
        }
        if (m.kind == MsgKind::ShardTransfer) {
            // data must never travel on the training link
            report.traffic.shard_transfer_frames += 1;
            report.aborted = true;
            report.abort_code = uint16_t(AbortCode::BadMessage);
            report.abort_detail = "shard transfer on the training channel";
            return report;
        }
        if (m.kind != MsgKind::ModelBroadcast)
            return failure_report(AbortCode::BadMessage,
                                  std::string("unexpected ") + msg_kind_name(m.kind));

        const auto& bc = std::get<ModelBroadcastBody>(m.body);
        if (bc.has_stats)
            report.rows.push_back(
                RoundRow{m.round - 1, bc.prev_loss, bc.prev_accuracy, last_step_ms});

        if (m.round == wp.rounds) {
            report.final_digest = params_digest(bc.params);
            TrainCompleteBody done;
            done.params_digest = report.final_digest;
            send_msg(ch, make_msg(MsgKind::TrainComplete, m.round, self, std::move(done)));
            break;
        }

        auto step_start = std::chrono::steady_clock::now();
        std::vector<Record> batch;
        batch.reserve(batch_size);
        for (uint32_t i = 0; i < batch_size; ++i)
            batch.push_back(shard[order[(cursor + i) % train_n]]);
        cursor = (cursor + batch_size) % train_n;

        std::vector<uint8_t> labels;
        labels.reserve(batch.size());
        for (const Record& r : batch) labels.push_back(r.label);

        auto [probs, cache] = forward(bc.params, wp.dlrm, batch);
        GradientPushBody push;
        push.train_loss = bce_loss<float>(probs, labels);
        push.delta = backward(bc.params, wp.dlrm, cache, labels);

        uint64_t correct = 0;
        if (!eval_set.empty()) {
            constexpr size_t kEvalChunk = 512;
            for (size_t off = 0; off < eval_set.size(); off += kEvalChunk) {
                size_t n = std::min(kEvalChunk, eval_set.size() - off);
                std::span<const Record> chunk(eval_set.data() + off, n);
                auto [eprobs, ecache] = forward(bc.params, wp.dlrm, chunk);
                for (size_t i = 0; i < n; ++i) {
                    uint8_t pred = eprobs[i] > 0.5f ? 1 : 0;
                    if (pred == chunk[i].label) ++correct;
                }
            }
        }
        push.eval_correct = correct;
        push.eval_total = eval_set.size();

        Message pm = make_msg(MsgKind::GradientPush, m.round, self, std::move(push));
        Bytes enc = encode(pm);
        report.traffic.max_push_bytes =
            std::max<uint64_t>(report.traffic.max_push_bytes, enc.size());
        uint64_t tx_before = ch.bytes_tx();
        ch.send(enc);
        report.traffic.per_round_egress.push_back(ch.bytes_tx() - tx_before);
        last_step_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - step_start)
                           .count();
    }

    report.traffic.total_tx = ch.bytes_tx();
    report.traffic.total_rx = ch.bytes_rx();
    return report;
}

// ---------------------------------------------------------------------------
// Chief
// ---------------------------------------------------------------------------

TrainReport chief_serve(const RunConfig& config, const Dataset& dataset,
                        std::unique_ptr<SecureChannel> ps_ch,
                        std::vector<std::unique_ptr<SecureChannel>> worker_chs) {
    TrainReport report;
    report.handshake_ms = ps_ch->handshake_millis();
    report.handshake_count = 1;
    for (const auto& ch : worker_chs) {
        report.handshake_ms += ch->handshake_millis();
        report.handshake_count += 1;
    }

    auto shards = shard(dataset, config.num_workers);
    const NodeId self{NodeRole::Chief, 0};
    ConfigTransferBody transfer;
    transfer.dlrm = config.dlrm;
    transfer.rounds = config.rounds;
    transfer.local_batch = config.local_batch;
    transfer.num_workers = config.num_workers;
    transfer.run_seed = config.seed;
    transfer.eval_permille = config.eval_permille;
    transfer.ps_addr = config.ps_addr;

    send_msg(*ps_ch, make_msg(MsgKind::ConfigTransfer, 0, self, transfer));
    Message ack = recv_msg(*ps_ch);
    if (ack.kind == MsgKind::Abort) {
        const auto& body = std::get<AbortBody>(ack.body);
        return failure_report(AbortCode(body.code), body.detail);
    }
    if (ack.kind != MsgKind::RegisterAck)
        return failure_report(AbortCode::BadMessage, "server rejected the configuration");

    // provision whichever worker shows up on each accepted connection
    std::set<uint32_t> provisioned;
    for (auto& ch : worker_chs) {
        Message reg = recv_msg(*ch);
        if (reg.kind != MsgKind::Register || reg.sender.role != NodeRole::Worker)
            return failure_report(AbortCode::BadMessage, "expected worker registration");
        uint32_t idx = reg.sender.index;
        if (idx >= config.num_workers || provisioned.count(idx))
            return failure_report(AbortCode::DuplicateIndex,
                                  "bad worker index " + std::to_string(idx));
        provisioned.insert(idx);
        send_msg(*ch, make_msg(MsgKind::ConfigTransfer, 0, self, transfer));
        ShardTransferBody sb;
        sb.worker_index = idx;
        sb.shard_bytes = serialize(shard_as_dataset(dataset, shards[idx]));
        send_msg(*ch, make_msg(MsgKind::ShardTransfer, 0, self, std::move(sb)));
        report.traffic.shard_transfer_frames += 1;
    }

    Message done = recv_msg(*ps_ch);
    if (done.kind == MsgKind::Abort) {
        const auto& body = std::get<AbortBody>(done.body);
        return failure_report(AbortCode(body.code), body.detail);
    }
    if (done.kind != MsgKind::TrainComplete)
        return failure_report(AbortCode::BadMessage, "expected the final model");
    const auto& body = std::get<TrainCompleteBody>(done.body);
    if (!body.has_params)
        return failure_report(AbortCode::BadMessage, "final model payload missing");
    if (params_digest(body.params) != body.params_digest)
        return failure_report(AbortCode::DigestMismatch,
                              "final model does not match its digest");
    report.final_digest = body.params_digest;
    if (!config.export_path.empty()) export_params(body.params, config.export_path);

    for (auto& ch : worker_chs) {
        report.traffic.total_tx += ch->bytes_tx();
        report.traffic.total_rx += ch->bytes_rx();
    }
    report.traffic.total_tx += ps_ch->bytes_tx();
    report.traffic.total_rx += ps_ch->bytes_rx();
    return report;
}

// SDT worker: provisioned by the chief, then trains against the server.
TrainReport worker_sdt_inner(
    const RunConfig& config, SecureChannel& chief_ch,
    const std::function<std::unique_ptr<SecureChannel>(const std::string& ps_addr)>&
        connect_ps) {
    const NodeId self{NodeRole::Worker, config.worker_index};
    send_msg(chief_ch, make_msg(MsgKind::Register, 0, self, RegisterBody{}));

    Message cfg_msg = recv_msg(chief_ch);
    if (cfg_msg.kind == MsgKind::Abort) {
        const auto& body = std::get<AbortBody>(cfg_msg.body);
        return failure_report(AbortCode(body.code), body.detail);
    }
    if (cfg_msg.kind != MsgKind::ConfigTransfer)
        return failure_report(AbortCode::BadMessage, "expected configuration from chief");
    const auto& cfg_body = std::get<ConfigTransferBody>(cfg_msg.body);

    Message shard_msg = recv_msg(chief_ch);
    if (shard_msg.kind != MsgKind::ShardTransfer)
        return failure_report(AbortCode::BadMessage, "expected shard from chief");
    const auto& shard_body = std::get<ShardTransferBody>(shard_msg.body);
    if (shard_body.worker_index != config.worker_index)
        return failure_report(AbortCode::BadMessage, "shard addressed to another worker");
    Dataset my_shard = deserialize(shard_body.shard_bytes);
    double chief_hs = chief_ch.handshake_millis();
    chief_ch.close();

    WorkerParams wp;
    wp.dlrm = cfg_body.dlrm;
    wp.rounds = cfg_body.rounds;
    wp.local_batch = cfg_body.local_batch;
    wp.eval_permille = cfg_body.eval_permille;
    wp.run_seed = cfg_body.run_seed;
    wp.worker_index = config.worker_index;

    auto ps_ch = connect_ps(cfg_body.ps_addr);
    TrainReport report = worker_loop(*ps_ch, wp, my_shard.records);
    report.handshake_ms += chief_hs;
    report.handshake_count += 1;
    return report;
}

}  // namespace

void RunConfig::validate() const {
    if (num_workers == 0) throw ConfigError("num_workers must be positive");
    if (rounds == 0) throw ConfigError("rounds must be positive");
    if (local_batch == 0) throw ConfigError("local batch size must be positive");
    if (eval_permille >= 1000) throw ConfigError("eval_permille must stay below 1000");
    dlrm.validate();
    if (build_id.empty()) throw ConfigError("build id must not be empty");
}

NodeAttestation RunConfig::identity() const {
    Bytes cfg_bytes(attest_config_id.begin(), attest_config_id.end());
    return NodeAttestation{measure(build_id, cfg_bytes), authority_from_seed(trust_seed)};
}

VerifyPolicy RunConfig::policy() const {
    Bytes cfg_bytes(attest_config_id.begin(), attest_config_id.end());
    Measurement m = measure(build_id, cfg_bytes);
    return VerifyPolicy{authority_from_seed(trust_seed).public_key, {m.digest}};
}

ChannelOptions RunConfig::channel_options() const {
    ChannelOptions o;
    o.handshake_timeout = handshake_timeout;
    o.io_timeout = io_timeout;
    return o;
}

TrainReport run_ps(const RunConfig& config, const std::function<void(uint16_t)>& on_listening) {
    config.validate();
    try {
        TcpListener listener(config.ps_listen);
        if (on_listening) on_listening(listener.port());

        const size_t expected = config.num_workers + (config.mode == Topology::SDT ? 1 : 0);
        const NodeAttestation id = config.identity();
        const VerifyPolicy pol = config.policy();
        auto accept_next = [&]() -> std::unique_ptr<SecureChannel> {
            auto stream = listener.accept(config.handshake_timeout);
            return SecureChannel::handshake(std::move(stream), ChannelRole::Responder,
                                            config.channel_mode, id, pol,
                                            config.channel_options());
        };
        return ps_serve(config, accept_next, expected, {});
    } catch (const ChannelError& e) {
        return failure_report(code_for(e), e.what());
    }
}

TrainReport run_worker_hfl(const RunConfig& config, const std::string& shard_path) {
    config.validate();
    Dataset shard_data;
    try {
        shard_data = read_file(shard_path);
    } catch (const IoError& e) {
        throw ConfigError(std::string("shard not readable: ") + e.what());
    }
    WorkerParams wp;
    wp.dlrm = config.dlrm;
    wp.rounds = config.rounds;
    wp.local_batch = config.local_batch;
    wp.eval_permille = config.eval_permille;
    wp.run_seed = config.seed;
    wp.worker_index = config.worker_index;
    try {
        auto stream = tcp_connect(config.ps_addr, config.handshake_timeout);
        auto channel = SecureChannel::handshake(std::move(stream), ChannelRole::Initiator,
                                                config.channel_mode, config.identity(),
                                                config.policy(), config.channel_options());
        return worker_loop(*channel, wp, shard_data.records);
    } catch (const ChannelError& e) {
        return failure_report(code_for(e), e.what());
    }
}

TrainReport run_worker_sdt(const RunConfig& config) {
    config.validate();
    try {
        auto chief_stream = tcp_connect(config.chief_addr, config.handshake_timeout);
        auto chief_ch = SecureChannel::handshake(std::move(chief_stream),
                                                 ChannelRole::Initiator,
                                                 config.channel_mode, config.identity(),
                                                 config.policy(), config.channel_options());
        return worker_sdt_inner(
            config, *chief_ch, [&](const std::string& ps_addr) {
                const std::string& target = ps_addr.empty() ? config.ps_addr : ps_addr;
                auto stream = tcp_connect(target, config.handshake_timeout);
                return SecureChannel::handshake(std::move(stream), ChannelRole::Initiator,
                                                config.channel_mode, config.identity(),
                                                config.policy(),
                                                config.channel_options());
            });
    } catch (const ChannelError& e) {
        return failure_report(code_for(e), e.what());
    }
}

TrainReport run_chief(const RunConfig& config, const std::string& dataset_path,
                      const std::function<void(uint16_t)>& on_listening) {
    config.validate();
    if (config.mode != Topology::SDT) throw ConfigError("the chief exists in SDT mode only");
    Dataset dataset = read_file(dataset_path);
    try {
        auto ps_stream = tcp_connect(config.ps_addr, config.handshake_timeout);
        auto ps_ch = SecureChannel::handshake(std::move(ps_stream), ChannelRole::Initiator,
                                              config.channel_mode, config.identity(),
                                              config.policy(), config.channel_options());

        TcpListener listener(config.chief_listen);
        if (on_listening) on_listening(listener.port());
        std::vector<std::unique_ptr<SecureChannel>> worker_chs;
        for (uint32_t i = 0; i < config.num_workers; ++i) {
            auto stream = listener.accept(config.handshake_timeout);
            worker_chs.push_back(SecureChannel::handshake(
                std::move(stream), ChannelRole::Responder, config.channel_mode,
                config.identity(), config.policy(), config.channel_options()));
        }
        return chief_serve(config, dataset, std::move(ps_ch), std::move(worker_chs));
    } catch (const ChannelError& e) {
        return failure_report(code_for(e), e.what());
    }
}

LocalRunResult run_local(const RunConfig& config, const Dataset& dataset,
                         const RoundObserver& observer) {
    config.validate();
    if (dataset.records.size() < config.num_workers)
        throw ConfigError("dataset smaller than the worker count");

    LocalRunResult result;
    result.workers.resize(config.num_workers);
    result.has_chief = config.mode == Topology::SDT;

    const NodeAttestation id = config.identity();
    const VerifyPolicy pol = config.policy();
    const ChannelOptions opts = config.channel_options();

    auto worker_report = [&](uint32_t idx) -> TrainReport& { return result.workers[idx]; };

    if (config.mode == Topology::HFL) {
        auto shards = shard(dataset, config.num_workers);

        std::vector<std::unique_ptr<ByteStream>> ps_side(config.num_workers);
        std::vector<std::thread> threads;
        for (uint32_t i = 0; i < config.num_workers; ++i) {
            auto [w_end, p_end] = make_stream_pair();
            ps_side[i] = std::move(p_end);
            threads.emplace_back([&, i, stream = std::move(w_end)]() mutable {
                try {
                    auto ch = SecureChannel::handshake(std::move(stream),
                                                       ChannelRole::Initiator,
                                                       config.channel_mode, id, pol, opts);
                    WorkerParams wp;
                    wp.dlrm = config.dlrm;
                    wp.rounds = config.rounds;
                    wp.local_batch = config.local_batch;
                    wp.eval_permille = config.eval_permille;
                    wp.run_seed = config.seed;
                    wp.worker_index = i;
                    worker_report(i) = worker_loop(*ch, wp, shards[i].records);
                } catch (const ChannelError& e) {
                    worker_report(i) = failure_report(code_for(e), e.what());
                } catch (const std::exception& e) {
                    worker_report(i) = failure_report(AbortCode::Internal, e.what());
                }
            });
        }

        try {
            size_t next = 0;
            auto accept_next = [&]() -> std::unique_ptr<SecureChannel> {
                return SecureChannel::handshake(std::move(ps_side[next++]),
                                                ChannelRole::Responder,
                                                config.channel_mode, id, pol, opts);
            };
            result.ps = ps_serve(config, accept_next, config.num_workers, observer);
        } catch (const ChannelError& e) {
            result.ps = failure_report(code_for(e), e.what());
        }
        for (auto& t : threads) t.join();
        return result;
    }

    // SDT: chief + server + workers
    auto [chief_ps_end, ps_chief_end] = make_stream_pair();
    std::vector<std::unique_ptr<ByteStream>> chief_worker_side(config.num_workers);
    std::vector<std::unique_ptr<ByteStream>> worker_chief_side(config.num_workers);
    std::vector<std::unique_ptr<ByteStream>> ps_worker_side(config.num_workers);
    std::vector<std::unique_ptr<ByteStream>> worker_ps_side(config.num_workers);
    for (uint32_t i = 0; i < config.num_workers; ++i) {
        auto [c_end, w_end] = make_stream_pair();
        chief_worker_side[i] = std::move(c_end);
        worker_chief_side[i] = std::move(w_end);
        auto [w2_end, p_end] = make_stream_pair();
        worker_ps_side[i] = std::move(w2_end);
        ps_worker_side[i] = std::move(p_end);
    }

    std::thread chief_thread([&, ps_stream = std::move(chief_ps_end)]() mutable {
        try {
            auto ps_ch = SecureChannel::handshake(std::move(ps_stream),
                                                  ChannelRole::Initiator,
                                                  config.channel_mode, id, pol, opts);
            std::vector<std::unique_ptr<SecureChannel>> worker_chs;
            for (uint32_t i = 0; i < config.num_workers; ++i)
                worker_chs.push_back(SecureChannel::handshake(
                    std::move(chief_worker_side[i]), ChannelRole::Responder,
                    config.channel_mode, id, pol, opts));
            result.chief = chief_serve(config, dataset, std::move(ps_ch),
                                       std::move(worker_chs));
        } catch (const ChannelError& e) {
            result.chief = failure_report(code_for(e), e.what());
        } catch (const std::exception& e) {
            result.chief = failure_report(AbortCode::Internal, e.what());
        }
    });

    std::vector<std::thread> workers;
    for (uint32_t i = 0; i < config.num_workers; ++i) {
        workers.emplace_back([&, i]() {
            try {
                RunConfig wcfg = config;
                wcfg.worker_index = i;
                auto chief_ch = SecureChannel::handshake(std::move(worker_chief_side[i]),
                                                         ChannelRole::Initiator,
                                                         config.channel_mode, id, pol,
                                                         opts);
                worker_report(i) = worker_sdt_inner(
                    wcfg, *chief_ch, [&](const std::string&) {
                        return SecureChannel::handshake(std::move(worker_ps_side[i]),
                                                        ChannelRole::Initiator,
                                                        config.channel_mode, id, pol,
                                                        opts);
                    });
            } catch (const ChannelError& e) {
                worker_report(i) = failure_report(code_for(e), e.what());
            } catch (const std::exception& e) {
                worker_report(i) = failure_report(AbortCode::Internal, e.what());
            }
        });
    }

    try {
        std::vector<std::unique_ptr<ByteStream>> pending;
        pending.push_back(std::move(ps_chief_end));
        for (uint32_t i = 0; i < config.num_workers; ++i)
            pending.push_back(std::move(ps_worker_side[i]));
        size_t next = 0;
        auto accept_next = [&]() -> std::unique_ptr<SecureChannel> {
            return SecureChannel::handshake(std::move(pending[next++]),
                                            ChannelRole::Responder, config.channel_mode,
                                            id, pol, opts);
        };
        result.ps = ps_serve(config, accept_next, pending.size(), observer);
    } catch (const ChannelError& e) {
        result.ps = failure_report(code_for(e), e.what());
    }

    chief_thread.join();
    for (auto& t : workers) t.join();
    return result;
}

}  // namespace efl
