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

#include "efl/metrics.hpp"

namespace efl {

// Native-versus-attested overhead measurement. Runs the configured topology
// twice with identical seeds, differing only in channel_mode, and checks
// that the metric columns came out bitwise identical - any divergence means
// the security layer leaked into the math.
struct BenchResult {
    double native_round_total_ms = 0, attested_round_total_ms = 0;
    double native_mean_round_ms = 0, attested_mean_round_ms = 0;
    double native_wall_ms = 0, attested_wall_ms = 0;
    double native_handshake_ms = 0, attested_handshake_ms = 0;
    double overhead_ratio = 0;  // attested / native, per-round totals
    double wall_ratio = 0;      // attested / native, end to end
    bool parity_ok = false;
    bool run_aborted = false;
    std::string abort_detail;
    std::string native_csv, attested_csv;
    Digest effective_config_digest{};  // channel mode excluded
};

BenchResult run_bench(const RunConfig& base, const Dataset& dataset);

std::string bench_summary(const BenchResult& r, const RunConfig& base);
std::string bench_csv(const BenchResult& r);

// Canonical digest of every run setting except the channel mode; the two
// bench legs must agree on it.
Digest effective_config_digest(const RunConfig& config);

}  // namespace efl
