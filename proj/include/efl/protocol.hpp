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

#pragma once

#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "efl/dlrm.hpp"

namespace efl {

// Wire schema and the parameter-server round state machine. Encodings are
// canonical: fixed field order, little-endian scalars, length-prefixed
// variable parts, trailing bytes rejected - two encodes of equal messages
// are byte-identical, which is what the params digest and the mode-parity
// checks lean on.

enum class MsgKind : uint8_t {
    Register = 1,
    RegisterAck = 2,
    ModelBroadcast = 3,
    GradientPush = 4,
    GradientAck = 5,
    ShardTransfer = 6,
    ConfigTransfer = 7,
    TrainComplete = 8,
    Abort = 9,
};

const char* msg_kind_name(MsgKind k);

enum class NodeRole : uint8_t { ParameterServer = 0, Worker = 1, Chief = 2 };

struct NodeId {
    NodeRole role = NodeRole::Worker;
    uint32_t index = 0;
    bool operator==(const NodeId&) const = default;
    bool operator<(const NodeId& o) const {
        return role != o.role ? role < o.role : index < o.index;
    }
};

struct RegisterBody {
    bool operator==(const RegisterBody&) const = default;
};

struct RegisterAckBody {
    uint32_t assigned_index = 0;
    bool operator==(const RegisterAckBody&) const = default;
};

struct ModelBroadcastBody {
    ModelParams params;
    // metrics of the round that produced these params; absent on round 0
    uint8_t has_stats = 0;
    double prev_loss = 0;
    double prev_accuracy = 0;
    bool operator==(const ModelBroadcastBody&) const = default;
};

struct GradientPushBody {
    GradientDelta delta;
    double train_loss = 0;
    uint64_t eval_correct = 0;
    uint64_t eval_total = 0;
    bool operator==(const GradientPushBody&) const = default;
};

struct GradientAckBody {
    uint32_t worker_index = 0;
    bool operator==(const GradientAckBody&) const = default;
};

struct ShardTransferBody {
    uint32_t worker_index = 0;
    Bytes shard_bytes;  // a dataset file image
    bool operator==(const ShardTransferBody&) const = default;
};

struct ConfigTransferBody {
    DlrmConfig dlrm;
    uint64_t rounds = 0;
    uint32_t local_batch = 0;
    uint32_t num_workers = 0;
    uint64_t run_seed = 0;
    uint16_t eval_permille = 0;
    std::string ps_addr;
    bool operator==(const ConfigTransferBody&) const = default;
};

struct TrainCompleteBody {
    Digest params_digest{};
    uint8_t has_params = 0;  // set when the PS ships the model to the chief
    ModelParams params;
    bool operator==(const TrainCompleteBody&) const = default;
};

enum class AbortCode : uint16_t {
    None = 0,
    DuplicatePush = 1,
    RoundMismatch = 2,
    UnknownNode = 3,
    RegistrationClosed = 4,
    DuplicateIndex = 5,
    BadMessage = 6,
    DigestMismatch = 7,
    Timeout = 8,
    Internal = 9,
};

const char* abort_code_name(AbortCode c);

struct AbortBody {
    uint16_t code = 0;
    std::string detail;
    bool operator==(const AbortBody&) const = default;
};

using MessageBody =
    std::variant<RegisterBody, RegisterAckBody, ModelBroadcastBody, GradientPushBody,
                 GradientAckBody, ShardTransferBody, ConfigTransferBody,
                 TrainCompleteBody, AbortBody>;

struct Message {
    uint8_t schema_version = 1;
    MsgKind kind = MsgKind::Register;
    uint64_t round = 0;
    NodeId sender;
    MessageBody body;
    bool operator==(const Message&) const = default;
};

// Canonical encodings. decode throws DecodeError (with offset) on unknown
// kind, version mismatch, truncation, trailing bytes, kind/body mismatch,
// or non-finite numeric payloads.
Bytes encode(const Message& msg);
Message decode(std::span<const uint8_t> data);

// Shared canonical sub-encodings, reused by measurement, digests, and the
// model export path.
Bytes encode_dlrm_config(const DlrmConfig& cfg);
Bytes encode_params(const ModelParams& params);
ModelParams decode_params(std::span<const uint8_t> data);

// SHA-256 over the canonical parameter encoding.
Digest params_digest(const ModelParams& params);

// Batch-size-weighted mean of gradients, accumulated in 64-bit in the given
// order and stored at parameter precision. Rows absent from a delta
// contribute zero. AggregationError on empty input or shape mismatch.
GradientDelta aggregate(std::span<const GradientDelta> deltas);

// ---------------------------------------------------------------------------
// Parameter-server state machine. Single-threaded; callers feed decoded,
// channel-authenticated messages one at a time and route the outbound list.
// Any protocol violation aborts the run - there is no recovery path.
// ---------------------------------------------------------------------------

enum class PsPhase : uint8_t {
    Registering,      // waiting for all K workers
    Collecting,       // inside a round, gathering pushes
    AwaitCompletion,  // final params broadcast, waiting for worker digests
    Finished,
    Aborted,
};

struct RoundStats {
    uint64_t round = 0;
    double loss = 0;
    double accuracy = 0;
};

struct PsOutbound {
    bool to_all_workers = false;
    uint32_t worker = 0;  // used when to_all_workers is false
    Message msg;
};

struct PsStepResult {
    std::vector<PsOutbound> out;
    bool aborted = false;
    AbortCode abort_code = AbortCode::None;
    std::string abort_detail;
    bool round_done = false;
    RoundStats stats;
    bool finished = false;
};

class PsMachine {
public:
    PsMachine(DlrmConfig cfg, uint32_t num_workers, uint64_t total_rounds);

    PsStepResult on_message(const Message& msg);

    const ModelParams& params() const { return params_; }
    const DlrmConfig& config() const { return cfg_; }
    PsPhase phase() const { return phase_; }
    uint64_t round() const { return round_; }
    uint32_t registered_count() const { return uint32_t(registered_.size()); }
    uint32_t received_count() const { return uint32_t(received_.size()); }

private:
    PsStepResult fail(AbortCode code, const std::string& detail);
    Message make_broadcast(bool with_stats, const RoundStats& stats) const;

    DlrmConfig cfg_;
    uint32_t num_workers_;
    uint64_t total_rounds_;
    ModelParams params_;
    PsPhase phase_ = PsPhase::Registering;
    uint64_t round_ = 0;

    std::set<uint32_t> registered_;
    struct Push {
        GradientDelta delta;
        double train_loss;
        uint64_t eval_correct, eval_total;
    };
    std::map<uint32_t, Push> received_;  // ordered: aggregation order is fixed
    std::set<uint32_t> completed_;
};

}  // namespace efl
