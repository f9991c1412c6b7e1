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

#include <string>

#include "efl/orchestration.hpp"

namespace efl {

// CSV schema: header `round,loss,accuracy,duration_ms`, one fixed-format row
// per round, then either `# ABORT <code> <detail>` for a run that died or
// `# params_digest <hex>` for one that finished. Formatting is pinned so two
// reports with equal metric values serialize to identical bytes.
std::string format_report_csv(const TrainReport& report);

void write_report_csv(const TrainReport& report, const std::string& path);  // IoError

// The timing-free projection used by parity checks: `round,loss,accuracy`
// data rows only.
std::string parity_columns(const std::string& csv);

}  // namespace efl
