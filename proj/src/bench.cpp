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

#include "efl/bench.hpp"

#include <cstdio>

#include "efl/bytes.hpp"
#include "efl/sha256.hpp"

namespace efl {

namespace {

struct LegTiming {
    double round_total_ms = 0;
    double mean_round_ms = 0;
    double wall_ms = 0;
    double handshake_ms = 0;
    std::string csv;
    bool aborted = false;
    std::string abort_detail;
    Digest final_digest{};
};

LegTiming run_leg(const RunConfig& cfg, const Dataset& data) {
    LegTiming leg;
    auto t0 = std::chrono::steady_clock::now();
    LocalRunResult res = run_local(cfg, data);
    leg.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    if (res.ps.aborted) {
        leg.aborted = true;
        leg.abort_detail = res.ps.abort_detail;
        return leg;
    }
    for (const RoundRow& row : res.ps.rows) leg.round_total_ms += row.duration_ms;
    leg.mean_round_ms =
        res.ps.rows.empty() ? 0 : leg.round_total_ms / double(res.ps.rows.size());
    leg.handshake_ms = res.ps.handshake_ms;
    for (const auto& w : res.workers) leg.handshake_ms += w.handshake_ms;
    if (res.has_chief) leg.handshake_ms += res.chief.handshake_ms;
    leg.csv = format_report_csv(res.ps);
    leg.final_digest = res.ps.final_digest;
    return leg;
}

}  // namespace

Digest effective_config_digest(const RunConfig& config) {
    ByteWriter w;
    w.u8(uint8_t(config.mode));
    // channel_mode deliberately excluded: it is the one benched variable
    w.u32(config.num_workers);
    w.u64(config.rounds);
    w.u32(config.local_batch);
    w.u16(config.eval_permille);
    w.raw(encode_dlrm_config(config.dlrm));
    w.u64(config.seed);
    w.str(config.build_id);
    w.str(config.attest_config_id);
    w.raw(config.trust_seed);
    return Sha256::digest(w.view());
}

BenchResult run_bench(const RunConfig& base, const Dataset& dataset) {
    RunConfig native_cfg = base;
    native_cfg.channel_mode = ChannelMode::Native;
    RunConfig attested_cfg = base;
    attested_cfg.channel_mode = ChannelMode::Attested;

    BenchResult result;
    result.effective_config_digest = effective_config_digest(native_cfg);
    if (effective_config_digest(attested_cfg) != result.effective_config_digest)
        throw ConfigError("bench legs diverge on settings other than channel mode");

    // sequential on purpose: concurrent legs would contend for the timer
    LegTiming native = run_leg(native_cfg, dataset);
    if (native.aborted) {
        result.run_aborted = true;
        result.abort_detail = "native leg: " + native.abort_detail;
        return result;
    }
    LegTiming attested = run_leg(attested_cfg, dataset);
    if (attested.aborted) {
        result.run_aborted = true;
        result.abort_detail = "attested leg: " + attested.abort_detail;
        return result;
    }

    result.native_round_total_ms = native.round_total_ms;
    result.attested_round_total_ms = attested.round_total_ms;
    result.native_mean_round_ms = native.mean_round_ms;
    result.attested_mean_round_ms = attested.mean_round_ms;
    result.native_wall_ms = native.wall_ms;
    result.attested_wall_ms = attested.wall_ms;
    result.native_handshake_ms = native.handshake_ms;
    result.attested_handshake_ms = attested.handshake_ms;
    result.overhead_ratio = native.round_total_ms > 0
                                ? attested.round_total_ms / native.round_total_ms
                                : 0;
    result.wall_ratio = native.wall_ms > 0 ? attested.wall_ms / native.wall_ms : 0;
    result.native_csv = native.csv;
    result.attested_csv = attested.csv;
    result.parity_ok = parity_columns(native.csv) == parity_columns(attested.csv) &&
                       native.final_digest == attested.final_digest;
    return result;
}

std::string bench_summary(const BenchResult& r, const RunConfig& base) {
    char buf[512];
    std::string out;
    std::snprintf(buf, sizeof(buf), "benchmark: %s, %u worker(s), %llu round(s)\n",
                  base.mode == Topology::HFL ? "hfl" : "sdt", base.num_workers,
                  (unsigned long long)base.rounds);
    out += buf;
    if (r.run_aborted) {
        out += "  run aborted: " + r.abort_detail + "\n";
        return out;
    }
    std::snprintf(buf, sizeof(buf),
                  "  native   rounds %.3f ms total, %.3f ms mean, wall %.3f ms, "
                  "handshakes %.3f ms\n",
                  r.native_round_total_ms, r.native_mean_round_ms, r.native_wall_ms,
                  r.native_handshake_ms);
    out += buf;
    std::snprintf(buf, sizeof(buf),
                  "  attested rounds %.3f ms total, %.3f ms mean, wall %.3f ms, "
                  "handshakes %.3f ms\n",
                  r.attested_round_total_ms, r.attested_mean_round_ms, r.attested_wall_ms,
                  r.attested_handshake_ms);
    out += buf;
    std::snprintf(buf, sizeof(buf), "  per-round overhead ratio: %.3fx\n",
                  r.overhead_ratio);
    out += buf;
    std::snprintf(buf, sizeof(buf), "  end-to-end ratio (handshakes included): %.3fx\n",
                  r.wall_ratio);
    out += buf;
    out += std::string("  metric parity: ") +
           (r.parity_ok ? "OK (loss/accuracy columns bitwise identical)"
                        : "FAILED (modes disagree on training metrics)") +
           "\n";
    out += "  config digest (channel mode excluded): " +
           to_hex(r.effective_config_digest) + "\n";
    out +=
        "  note: ratios measure crypto and protocol cost in this simulation only;\n"
        "  hardware TEE effects (EPC paging, enclave transitions, LibOS overhead)\n"
        "  are not modeled, so figures are not comparable to SGX deployments.\n";
    return out;
}

std::string bench_csv(const BenchResult& r) {
    char buf[128];
    std::string out = "metric,value\n";
    auto add = [&](const char* k, double v) {
        std::snprintf(buf, sizeof(buf), "%s,%.6f\n", k, v);
        out += buf;
    };
    add("native_round_total_ms", r.native_round_total_ms);
    add("attested_round_total_ms", r.attested_round_total_ms);
    add("native_mean_round_ms", r.native_mean_round_ms);
    add("attested_mean_round_ms", r.attested_mean_round_ms);
    add("native_wall_ms", r.native_wall_ms);
    add("attested_wall_ms", r.attested_wall_ms);
    add("native_handshake_ms", r.native_handshake_ms);
    add("attested_handshake_ms", r.attested_handshake_ms);
    add("overhead_ratio", r.overhead_ratio);
    add("wall_ratio", r.wall_ratio);
    out += std::string("parity,") + (r.parity_ok ? "true" : "false") + "\n";
    return out;
}

}  // namespace efl
