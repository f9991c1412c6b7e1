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

#include "efl/protocol.hpp"

#include <cmath>

#include "efl/bytes.hpp"
#include "efl/sha256.hpp"

namespace efl {

namespace {

constexpr uint8_t kSchemaVersion = 1;

void write_f32_checked(ByteWriter& w, float v) { w.f32(v); }

float read_f32_finite(ByteReader& r) {
    size_t off = r.offset();
    float v = r.f32();
    if (!std::isfinite(v)) throw DecodeError("non-finite value", off);
    return v;
}

void write_layers(ByteWriter& w, const std::vector<MlpLayer<float>>& layers) {
    w.u32(uint32_t(layers.size()));
    for (const auto& l : layers) {
        w.u32(l.w.rows);
        w.u32(l.w.cols);
        for (float v : l.w.a) write_f32_checked(w, v);
        w.u32(uint32_t(l.b.size()));
        for (float v : l.b) write_f32_checked(w, v);
    }
}

std::vector<MlpLayer<float>> read_layers(ByteReader& r) {
    uint32_t count = r.u32();
    if (count > 64) throw DecodeError("implausible layer count", r.offset());
    std::vector<MlpLayer<float>> layers;
    layers.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        MlpLayer<float> l;
        uint32_t rows = r.u32(), cols = r.u32();
        if (uint64_t(rows) * cols > (1ull << 28))
            throw DecodeError("implausible layer size", r.offset());
        l.w = Mat<float>(rows, cols);
        for (auto& v : l.w.a) v = read_f32_finite(r);
        uint32_t blen = r.u32();
        if (blen != rows) throw DecodeError("bias length does not match rows", r.offset());
        l.b.resize(blen);
        for (auto& v : l.b) v = read_f32_finite(r);
        layers.push_back(std::move(l));
    }
    return layers;
}

void write_params_into(ByteWriter& w, const ModelParams& p) {
    w.u64(p.version);
    w.u32(uint32_t(p.tables.size()));
    for (const auto& t : p.tables) {
        w.u32(t.rows);
        w.u32(t.cols);
        for (float v : t.a) write_f32_checked(w, v);
    }
    write_layers(w, p.bottom);
    write_layers(w, p.top);
}

ModelParams read_params(ByteReader& r) {
    ModelParams p;
    p.version = r.u64();
    uint32_t ntables = r.u32();
    if (ntables > 4096) throw DecodeError("implausible table count", r.offset());
    p.tables.reserve(ntables);
    for (uint32_t i = 0; i < ntables; ++i) {
        uint32_t rows = r.u32(), cols = r.u32();
        if (uint64_t(rows) * cols > (1ull << 28))
            throw DecodeError("implausible table size", r.offset());
        Mat<float> t(rows, cols);
        for (auto& v : t.a) v = read_f32_finite(r);
        p.tables.push_back(std::move(t));
    }
    p.bottom = read_layers(r);
    p.top = read_layers(r);
    return p;
}

void write_delta(ByteWriter& w, const GradientDelta& d) {
    write_layers(w, d.bottom);
    write_layers(w, d.top);
    w.u32(uint32_t(d.sparse.size()));
    for (const auto& sg : d.sparse) {
        w.u16(sg.table);
        w.u32(sg.row);
        w.u32(uint32_t(sg.g.size()));
        for (float v : sg.g) write_f32_checked(w, v);
    }
    w.u64(d.batch_size);
}

GradientDelta read_delta(ByteReader& r) {
    GradientDelta d;
    d.bottom = read_layers(r);
    d.top = read_layers(r);
    uint32_t nsparse = r.u32();
    if (nsparse > (1u << 24)) throw DecodeError("implausible sparse count", r.offset());
    d.sparse.reserve(nsparse);
    std::pair<uint16_t, uint32_t> prev{0, 0};
    for (uint32_t i = 0; i < nsparse; ++i) {
        SparseRowGrad<float> sg;
        sg.table = r.u16();
        sg.row = r.u32();
        std::pair<uint16_t, uint32_t> key{sg.table, sg.row};
        if (i > 0 && !(prev < key))
            throw DecodeError("sparse rows out of order or duplicated", r.offset());
        prev = key;
        uint32_t dim = r.u32();
        if (dim > (1u << 20)) throw DecodeError("implausible embedding width", r.offset());
        sg.g.resize(dim);
        for (auto& v : sg.g) v = read_f32_finite(r);
        d.sparse.push_back(std::move(sg));
    }
    d.batch_size = r.u64();
    if (d.batch_size == 0) throw DecodeError("gradient batch size is zero", r.offset());
    return d;
}

void write_config(ByteWriter& w, const DlrmConfig& cfg) {
    w.u16(cfg.num_dense);
    w.u16(cfg.num_sparse);
    w.u32(uint32_t(cfg.vocab_sizes.size()));
    for (uint32_t v : cfg.vocab_sizes) w.u32(v);
    w.u32(cfg.embed_dim);
    w.u32(uint32_t(cfg.bottom_dims.size()));
    for (uint32_t v : cfg.bottom_dims) w.u32(v);
    w.u32(uint32_t(cfg.top_dims.size()));
    for (uint32_t v : cfg.top_dims) w.u32(v);
    w.f32(cfg.learning_rate);
    w.u64(cfg.seed);
}

DlrmConfig read_config(ByteReader& r) {
    DlrmConfig cfg;
    cfg.num_dense = r.u16();
    cfg.num_sparse = r.u16();
    uint32_t nv = r.u32();
    if (nv > 4096) throw DecodeError("implausible vocab count", r.offset());
    cfg.vocab_sizes.resize(nv);
    for (auto& v : cfg.vocab_sizes) v = r.u32();
    cfg.embed_dim = r.u32();
    uint32_t nb = r.u32();
    if (nb > 64) throw DecodeError("implausible bottom depth", r.offset());
    cfg.bottom_dims.resize(nb);
    for (auto& v : cfg.bottom_dims) v = r.u32();
    uint32_t nt = r.u32();
    if (nt > 64) throw DecodeError("implausible top depth", r.offset());
    cfg.top_dims.resize(nt);
    for (auto& v : cfg.top_dims) v = r.u32();
    cfg.learning_rate = r.f32();
    cfg.seed = r.u64();
    return cfg;
}

}  // namespace

const char* msg_kind_name(MsgKind k) {
    switch (k) {
        case MsgKind::Register: return "Register";
        case MsgKind::RegisterAck: return "RegisterAck";
        case MsgKind::ModelBroadcast: return "ModelBroadcast";
        case MsgKind::GradientPush: return "GradientPush";
        case MsgKind::GradientAck: return "GradientAck";
        case MsgKind::ShardTransfer: return "ShardTransfer";
        case MsgKind::ConfigTransfer: return "ConfigTransfer";
        case MsgKind::TrainComplete: return "TrainComplete";
        case MsgKind::Abort: return "Abort";
    }
    return "?";
}

const char* abort_code_name(AbortCode c) {
    switch (c) {
        case AbortCode::None: return "none";
        case AbortCode::DuplicatePush: return "duplicate gradient push";
        case AbortCode::RoundMismatch: return "push for a stale or future round";
        case AbortCode::UnknownNode: return "message from unregistered node";
        case AbortCode::RegistrationClosed: return "registration after training start";
        case AbortCode::DuplicateIndex: return "duplicate worker index";
        case AbortCode::BadMessage: return "message not valid in this phase";
        case AbortCode::DigestMismatch: return "worker model digest mismatch";
        case AbortCode::Timeout: return "peer timed out";
        case AbortCode::Internal: return "internal error";
    }
    return "?";
}

Bytes encode(const Message& msg) {
    if (msg.schema_version != kSchemaVersion)
        throw EncodingError("unsupported schema version");
    ByteWriter w;
    w.u8(msg.schema_version);
    w.u8(uint8_t(msg.kind));
    w.u64(msg.round);
    w.u8(uint8_t(msg.sender.role));
    w.u32(msg.sender.index);

    // variant index must agree with the kind tag
    bool matched = false;
    switch (msg.kind) {
        case MsgKind::Register:
            matched = std::holds_alternative<RegisterBody>(msg.body);
            break;
        case MsgKind::RegisterAck:
            if ((matched = std::holds_alternative<RegisterAckBody>(msg.body)))
                w.u32(std::get<RegisterAckBody>(msg.body).assigned_index);
            break;
        case MsgKind::ModelBroadcast:
            if ((matched = std::holds_alternative<ModelBroadcastBody>(msg.body))) {
                const auto& b = std::get<ModelBroadcastBody>(msg.body);
                write_params_into(w, b.params);
                w.u8(b.has_stats);
                w.f64(b.prev_loss);
                w.f64(b.prev_accuracy);
            }
            break;
        case MsgKind::GradientPush:
            if ((matched = std::holds_alternative<GradientPushBody>(msg.body))) {
                const auto& b = std::get<GradientPushBody>(msg.body);
                write_delta(w, b.delta);
                w.f64(b.train_loss);
                w.u64(b.eval_correct);
                w.u64(b.eval_total);
            }
            break;
        case MsgKind::GradientAck:
            if ((matched = std::holds_alternative<GradientAckBody>(msg.body)))
                w.u32(std::get<GradientAckBody>(msg.body).worker_index);
            break;
        case MsgKind::ShardTransfer:
            if ((matched = std::holds_alternative<ShardTransferBody>(msg.body))) {
                const auto& b = std::get<ShardTransferBody>(msg.body);
                w.u32(b.worker_index);
                w.u32(uint32_t(b.shard_bytes.size()));
                w.raw(b.shard_bytes);
            }
            break;
        case MsgKind::ConfigTransfer:
            if ((matched = std::holds_alternative<ConfigTransferBody>(msg.body))) {
                const auto& b = std::get<ConfigTransferBody>(msg.body);
                write_config(w, b.dlrm);
                w.u64(b.rounds);
                w.u32(b.local_batch);
                w.u32(b.num_workers);
                w.u64(b.run_seed);
                w.u16(b.eval_permille);
                w.str(b.ps_addr);
            }
            break;
        case MsgKind::TrainComplete:
            if ((matched = std::holds_alternative<TrainCompleteBody>(msg.body))) {
                const auto& b = std::get<TrainCompleteBody>(msg.body);
                w.raw(b.params_digest);
                w.u8(b.has_params);
                if (b.has_params) write_params_into(w, b.params);
            }
            break;
        case MsgKind::Abort:
            if ((matched = std::holds_alternative<AbortBody>(msg.body))) {
                const auto& b = std::get<AbortBody>(msg.body);
                w.u16(b.code);
                w.str(b.detail);
            }
            break;
    }
    if (!matched) throw EncodingError("message body does not match kind");
    return w.take();
}

Message decode(std::span<const uint8_t> data) {
    ByteReader r(data);
    Message msg;
    msg.schema_version = r.u8();
    if (msg.schema_version != kSchemaVersion)
        throw DecodeError("schema version " + std::to_string(msg.schema_version) +
                              " unsupported",
                          0);
    uint8_t kind = r.u8();
    if (kind < uint8_t(MsgKind::Register) || kind > uint8_t(MsgKind::Abort))
        throw DecodeError("unknown message kind " + std::to_string(kind), 1);
    msg.kind = MsgKind(kind);
    msg.round = r.u64();
    uint8_t role = r.u8();
    if (role > uint8_t(NodeRole::Chief)) throw DecodeError("unknown sender role", 10);
    msg.sender.role = NodeRole(role);
    msg.sender.index = r.u32();

    switch (msg.kind) {
        case MsgKind::Register:
            msg.body = RegisterBody{};
            break;
        case MsgKind::RegisterAck:
            msg.body = RegisterAckBody{r.u32()};
            break;
        case MsgKind::ModelBroadcast: {
            ModelBroadcastBody b;
            b.params = read_params(r);
            b.has_stats = r.u8();
            b.prev_loss = r.f64();
            b.prev_accuracy = r.f64();
            msg.body = std::move(b);
            break;
        }
        case MsgKind::GradientPush: {
            GradientPushBody b;
            b.delta = read_delta(r);
            b.train_loss = r.f64();
            b.eval_correct = r.u64();
            b.eval_total = r.u64();
            msg.body = std::move(b);
            break;
        }
        case MsgKind::GradientAck:
            msg.body = GradientAckBody{r.u32()};
            break;
        case MsgKind::ShardTransfer: {
            ShardTransferBody b;
            b.worker_index = r.u32();
            uint32_t len = r.u32();
            auto bytes = r.raw(len);
            b.shard_bytes.assign(bytes.begin(), bytes.end());
            msg.body = std::move(b);
            break;
        }
        case MsgKind::ConfigTransfer: {
            ConfigTransferBody b;
            b.dlrm = read_config(r);
            b.rounds = r.u64();
            b.local_batch = r.u32();
            b.num_workers = r.u32();
            b.run_seed = r.u64();
            b.eval_permille = r.u16();
            b.ps_addr = r.str();
            msg.body = std::move(b);
            break;
        }
        case MsgKind::TrainComplete: {
            TrainCompleteBody b;
            auto dig = r.raw(32);
            std::copy(dig.begin(), dig.end(), b.params_digest.begin());
            b.has_params = r.u8();
            if (b.has_params > 1) throw DecodeError("bad has_params flag", r.offset());
            if (b.has_params) b.params = read_params(r);
            msg.body = std::move(b);
            break;
        }
        case MsgKind::Abort: {
            AbortBody b;
            b.code = r.u16();
            b.detail = r.str();
            msg.body = std::move(b);
            break;
        }
    }
    r.expect_end();
    return msg;
}

Bytes encode_dlrm_config(const DlrmConfig& cfg) {
    ByteWriter w;
    write_config(w, cfg);
    return w.take();
}

Bytes encode_params(const ModelParams& params) {
    ByteWriter w;
    write_params_into(w, params);
    return w.take();
}

ModelParams decode_params(std::span<const uint8_t> data) {
    ByteReader r(data);
    ModelParams p = read_params(r);
    r.expect_end();
    return p;
}

Digest params_digest(const ModelParams& params) {
    return Sha256::digest(encode_params(params));
}

GradientDelta aggregate(std::span<const GradientDelta> deltas) {
    if (deltas.empty()) throw AggregationError("nothing to aggregate");
    const GradientDelta& first = deltas.front();

    double total_weight = 0;
    for (const auto& d : deltas) {
        if (d.batch_size == 0) throw AggregationError("delta with zero batch size");
        if (d.bottom.size() != first.bottom.size() || d.top.size() != first.top.size())
            throw AggregationError("layer count mismatch");
        total_weight += double(d.batch_size);
    }

    GradientDelta out;
    out.batch_size = 0;
    for (const auto& d : deltas) out.batch_size += d.batch_size;

    auto combine_layers = [&](auto getter) {
        const auto& ref = getter(first);
        std::vector<MlpLayer<float>> result;
        for (size_t l = 0; l < ref.size(); ++l) {
            MlpLayer<float> layer;
            layer.w = Mat<float>(ref[l].w.rows, ref[l].w.cols);
            layer.b.assign(ref[l].b.size(), 0.0f);
            std::vector<double> wacc(ref[l].w.a.size(), 0.0);
            std::vector<double> bacc(ref[l].b.size(), 0.0);
            for (const auto& d : deltas) {
                const auto& src = getter(d)[l];
                if (src.w.rows != ref[l].w.rows || src.w.cols != ref[l].w.cols ||
                    src.b.size() != ref[l].b.size())
                    throw AggregationError("layer shape mismatch");
                double wgt = double(d.batch_size);
                for (size_t i = 0; i < wacc.size(); ++i) wacc[i] += wgt * double(src.w.a[i]);
                for (size_t i = 0; i < bacc.size(); ++i) bacc[i] += wgt * double(src.b[i]);
            }
            for (size_t i = 0; i < wacc.size(); ++i) {
                layer.w.a[i] = float(wacc[i] / total_weight);
                if (!std::isfinite(layer.w.a[i]))
                    throw AggregationError("non-finite aggregated gradient");
            }
            for (size_t i = 0; i < bacc.size(); ++i) {
                layer.b[i] = float(bacc[i] / total_weight);
                if (!std::isfinite(layer.b[i]))
                    throw AggregationError("non-finite aggregated gradient");
            }
            result.push_back(std::move(layer));
        }
        return result;
    };
    out.bottom = combine_layers([](const GradientDelta& d) -> const auto& { return d.bottom; });
    out.top = combine_layers([](const GradientDelta& d) -> const auto& { return d.top; });

    // sparse rows: weighted sums per (table, row); absent rows contribute zero
    std::map<std::pair<uint16_t, uint32_t>, std::vector<double>> acc;
    size_t dim = 0;
    for (const auto& d : deltas) {
        for (const auto& sg : d.sparse) {
            if (dim == 0) dim = sg.g.size();
            if (sg.g.size() != dim) throw AggregationError("embedding width mismatch");
            auto& slot = acc[{sg.table, sg.row}];
            if (slot.empty()) slot.assign(dim, 0.0);
            double wgt = double(d.batch_size);
            for (size_t c = 0; c < dim; ++c) slot[c] += wgt * double(sg.g[c]);
        }
    }
    for (auto& [key, sums] : acc) {
        SparseRowGrad<float> sg;
        sg.table = key.first;
        sg.row = key.second;
        sg.g.resize(sums.size());
        for (size_t c = 0; c < sums.size(); ++c) {
            sg.g[c] = float(sums[c] / total_weight);
            if (!std::isfinite(sg.g[c]))
                throw AggregationError("non-finite aggregated gradient");
        }
        out.sparse.push_back(std::move(sg));
    }
    return out;
}

PsMachine::PsMachine(DlrmConfig cfg, uint32_t num_workers, uint64_t total_rounds)
    : cfg_(std::move(cfg)), num_workers_(num_workers), total_rounds_(total_rounds) {
    if (num_workers_ == 0) throw ConfigError("need at least one worker");
    if (total_rounds_ == 0) throw ConfigError("need at least one round");
    cfg_.validate();
    params_ = init_params<float>(cfg_);
}

PsStepResult PsMachine::fail(AbortCode code, const std::string& detail) {
    phase_ = PsPhase::Aborted;
    PsStepResult res;
    res.aborted = true;
    res.abort_code = code;
    res.abort_detail = detail;
    Message abort_msg;
    abort_msg.kind = MsgKind::Abort;
    abort_msg.round = round_;
    abort_msg.sender = NodeId{NodeRole::ParameterServer, 0};
    abort_msg.body = AbortBody{uint16_t(code), detail};
    res.out.push_back(PsOutbound{true, 0, std::move(abort_msg)});
    return res;
}

Message PsMachine::make_broadcast(bool with_stats, const RoundStats& stats) const {
    Message m;
    m.kind = MsgKind::ModelBroadcast;
    m.round = round_;
    m.sender = NodeId{NodeRole::ParameterServer, 0};
    ModelBroadcastBody body;
    body.params = params_;
    body.has_stats = with_stats ? 1 : 0;
    body.prev_loss = with_stats ? stats.loss : 0.0;
    body.prev_accuracy = with_stats ? stats.accuracy : 0.0;
    m.body = std::move(body);
    return m;
}

PsStepResult PsMachine::on_message(const Message& msg) {
    if (phase_ == PsPhase::Aborted || phase_ == PsPhase::Finished)
        return fail(AbortCode::BadMessage, "machine is no longer running");

    switch (msg.kind) {
        case MsgKind::Register: {
            if (msg.sender.role != NodeRole::Worker)
                return fail(AbortCode::UnknownNode, "only workers register");
            if (phase_ != PsPhase::Registering)
                return fail(AbortCode::RegistrationClosed,
                            "registration after training start");
            uint32_t idx = msg.sender.index;
            if (idx >= num_workers_)
                return fail(AbortCode::UnknownNode,
                            "worker index " + std::to_string(idx) + " out of range");
            if (registered_.count(idx))
                return fail(AbortCode::DuplicateIndex,
                            "worker " + std::to_string(idx) + " already registered");
            registered_.insert(idx);

            PsStepResult res;
            Message ack;
            ack.kind = MsgKind::RegisterAck;
            ack.round = 0;
            ack.sender = NodeId{NodeRole::ParameterServer, 0};
            ack.body = RegisterAckBody{idx};
            res.out.push_back(PsOutbound{false, idx, std::move(ack)});

            if (registered_.size() == num_workers_) {
                phase_ = PsPhase::Collecting;  // broadcast, then collect round 0
                res.out.push_back(PsOutbound{true, 0, make_broadcast(false, {})});
            }
            return res;
        }

        case MsgKind::GradientPush: {
            if (phase_ != PsPhase::Collecting)
                return fail(AbortCode::BadMessage, "push outside the collecting phase");
            if (msg.sender.role != NodeRole::Worker ||
                !registered_.count(msg.sender.index))
                return fail(AbortCode::UnknownNode, "push from unregistered node");
            if (msg.round != round_)
                return fail(AbortCode::RoundMismatch,
                            "push carries round " + std::to_string(msg.round) +
                                " during round " + std::to_string(round_));
            if (received_.count(msg.sender.index))
                return fail(AbortCode::DuplicatePush,
                            "worker " + std::to_string(msg.sender.index) +
                                " already pushed this round");
            const auto& body = std::get<GradientPushBody>(msg.body);
            received_.emplace(msg.sender.index,
                              Push{body.delta, body.train_loss, body.eval_correct,
                                   body.eval_total});
            if (received_.size() < num_workers_) return PsStepResult{};

            // barrier complete: aggregate in ascending worker order
            std::vector<GradientDelta> deltas;
            deltas.reserve(received_.size());
            double loss_acc = 0, weight_acc = 0;
            uint64_t correct = 0, total = 0;
            for (const auto& [idx, push] : received_) {
                deltas.push_back(push.delta);
                loss_acc += double(push.delta.batch_size) * push.train_loss;
                weight_acc += double(push.delta.batch_size);
                correct += push.eval_correct;
                total += push.eval_total;
            }
            GradientDelta agg;
            try {
                agg = aggregate(deltas);
                sgd_apply(params_, agg, cfg_.learning_rate);
            } catch (const std::exception& e) {
                return fail(AbortCode::Internal, e.what());
            }
            received_.clear();

            PsStepResult res;
            res.round_done = true;
            res.stats.round = round_;
            res.stats.loss = loss_acc / weight_acc;
            res.stats.accuracy = total > 0 ? double(correct) / double(total) : 0.0;
            round_ += 1;
            if (round_ == total_rounds_) phase_ = PsPhase::AwaitCompletion;
            res.out.push_back(PsOutbound{true, 0, make_broadcast(true, res.stats)});
            return res;
        }

        case MsgKind::TrainComplete: {
            if (phase_ != PsPhase::AwaitCompletion)
                return fail(AbortCode::BadMessage, "completion before the final round");
            if (msg.sender.role != NodeRole::Worker ||
                !registered_.count(msg.sender.index))
                return fail(AbortCode::UnknownNode, "completion from unregistered node");
            if (completed_.count(msg.sender.index))
                return fail(AbortCode::BadMessage, "worker completed twice");
            const auto& body = std::get<TrainCompleteBody>(msg.body);
            if (body.params_digest != params_digest(params_))
                return fail(AbortCode::DigestMismatch,
                            "worker " + std::to_string(msg.sender.index) +
                                " holds a different final model");
            completed_.insert(msg.sender.index);
            PsStepResult res;
            if (completed_.size() == num_workers_) {
                phase_ = PsPhase::Finished;
                res.finished = true;
            }
            return res;
        }

        case MsgKind::Abort: {
            const auto& body = std::get<AbortBody>(msg.body);
            return fail(AbortCode(body.code), "peer abort: " + body.detail);
        }

        default:
            return fail(AbortCode::BadMessage,
                        std::string("unexpected ") + msg_kind_name(msg.kind));
    }
}

}  // namespace efl
