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

#include <functional>
#include <optional>

#include "efl/channel.hpp"
#include "efl/datagen.hpp"
#include "efl/protocol.hpp"

namespace efl {

// Node lifecycles for the two topologies.
//
// HFL: every worker owns a local shard; only gradients travel. The parameter
// server aggregates a full barrier each round and broadcasts the updated
// model.
//
// SDT: a chief owns the dataset, ships config and shards to the other nodes
// over attested channels at initialization, then the run proceeds exactly
// like HFL and the chief collects the final model from the server.
//
// Model and gradient state live in process memory only; nothing touches disk
// unless an explicit export path is configured.

enum class Topology : uint8_t { HFL = 0, SDT = 1 };

inline constexpr const char* kDefaultBuildId = "efl-0.1.0";

struct RunConfig {
    Topology mode = Topology::HFL;
    ChannelMode channel_mode = ChannelMode::Attested;
    uint32_t num_workers = 4;
    uint64_t rounds = 10;
    uint32_t local_batch = 64;
    uint16_t eval_permille = 100;  // held-out tail of each shard, per mille
    DlrmConfig dlrm = default_dlrm_config();
    uint64_t seed = 1;  // run seed: batch schedules derive from it

    std::string build_id = kDefaultBuildId;
    std::string attest_config_id;  // optional extra identity folded into the measurement
    std::array<uint8_t, 32> trust_seed{};

    std::string ps_listen = "127.0.0.1:7700";
    std::string ps_addr = "127.0.0.1:7700";
    std::string chief_listen = "127.0.0.1:7701";
    std::string chief_addr = "127.0.0.1:7701";

    uint32_t worker_index = 0;    // run-worker only
    std::string export_path;      // optional canonical model dump

    std::chrono::milliseconds handshake_timeout{10000};
    std::chrono::milliseconds io_timeout{60000};

    void validate() const;  // ConfigError
    NodeAttestation identity() const;
    VerifyPolicy policy() const;
    ChannelOptions channel_options() const;
};

struct RoundRow {
    uint64_t round = 0;
    double loss = 0;
    double accuracy = 0;
    double duration_ms = 0;
};

struct TrafficAudit {
    uint64_t shard_transfer_frames = 0;      // ShardTransfer messages on the PS link
    std::vector<uint64_t> per_round_egress;  // worker bytes written per round
    uint64_t max_push_bytes = 0;             // largest encoded GradientPush
    uint64_t total_tx = 0, total_rx = 0;
};

struct TrainReport {
    std::vector<RoundRow> rows;
    Digest final_digest{};
    bool aborted = false;
    uint16_t abort_code = 0;
    std::string abort_detail;
    double handshake_ms = 0;  // summed across this node's channels
    uint32_t handshake_count = 0;
    TrafficAudit traffic;
};

// Called on the server after every aggregation, with the freshly updated
// params. Serialized; single-process runs only.
using RoundObserver =
    std::function<void(const RoundStats& stats, const ModelParams& params)>;

// ---- multi-process entry points (TCP) ----

// Binds config.ps_listen; reports the actual port before accepting.
TrainReport run_ps(const RunConfig& config,
                   const std::function<void(uint16_t)>& on_listening = {});
TrainReport run_worker_hfl(const RunConfig& config, const std::string& shard_path);
TrainReport run_worker_sdt(const RunConfig& config);
TrainReport run_chief(const RunConfig& config, const std::string& dataset_path,
                      const std::function<void(uint16_t)>& on_listening = {});

// ---- single-process runner (in-memory streams, one thread per node) ----

struct LocalRunResult {
    TrainReport ps;
    std::vector<TrainReport> workers;
    TrainReport chief;  // meaningful in SDT mode only
    bool has_chief = false;
};

LocalRunResult run_local(const RunConfig& config, const Dataset& dataset,
                         const RoundObserver& observer = {});

}  // namespace efl
