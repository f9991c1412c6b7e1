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

#include <iosfwd>

namespace efl {

// Exit codes, also listed in --help. Distinct classes so scripts can tell a
// bad invocation from a failed run.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;      // unknown/missing flags
inline constexpr int kExitConfig = 3;     // values that do not make a runnable setup
inline constexpr int kExitAbort = 4;      // a protocol or channel abort ended the run
inline constexpr int kExitParity = 5;     // bench: modes disagree on training metrics
inline constexpr int kExitIo = 6;         // filesystem trouble

// Settings resolve in ascending precedence: config file, EFL_* environment
// variables, command-line flags.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace efl
