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

#include "efl/metrics.hpp"

#include <cinttypes>
#include <cstdio>
#include <memory>
#include <sstream>

namespace efl {

std::string format_report_csv(const TrainReport& report) {
    std::string out = "round,loss,accuracy,duration_ms\n";
    char line[160];
    for (const RoundRow& row : report.rows) {
        std::snprintf(line, sizeof(line), "%" PRIu64 ",%.9f,%.9f,%.3f\n", row.round,
                      row.loss, row.accuracy, row.duration_ms);
        out += line;
    }
    if (report.aborted) {
        std::snprintf(line, sizeof(line), "# ABORT %u %s\n", unsigned(report.abort_code),
                      report.abort_detail.c_str());
        out += line;
    } else {
        out += "# params_digest " + to_hex(report.final_digest) + "\n";
    }
    return out;
}

void write_report_csv(const TrainReport& report, const std::string& path) {
    std::string data = format_report_csv(report);
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!f) throw IoError("cannot open metrics path: " + path);
    if (std::fwrite(data.data(), 1, data.size(), f.get()) != data.size())
        throw IoError("short write: " + path);
}

std::string parity_columns(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("round,", 0) == 0) continue;
        // keep the first three comma-separated fields
        size_t first = line.find(',');
        size_t second = first == std::string::npos ? first : line.find(',', first + 1);
        size_t third = second == std::string::npos ? second : line.find(',', second + 1);
        out += line.substr(0, third) + "\n";
    }
    return out;
}

}  // namespace efl
