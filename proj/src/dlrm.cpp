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

#include "efl/dlrm.hpp"

namespace efl {

void DlrmConfig::validate() const {
    if (num_dense == 0) throw ConfigError("num_dense must be positive");
    if (vocab_sizes.size() != num_sparse)
        throw ConfigError("vocab_sizes must have one entry per sparse feature");
    for (size_t i = 0; i < vocab_sizes.size(); ++i)
        if (vocab_sizes[i] == 0)
            throw ConfigError("vocab size for table " + std::to_string(i) + " is zero");
    if (embed_dim == 0) throw ConfigError("embed_dim must be positive");
    if (bottom_dims.empty()) throw ConfigError("bottom MLP needs at least one layer");
    if (top_dims.empty()) throw ConfigError("top MLP needs at least one layer");
    for (uint32_t w : bottom_dims)
        if (w == 0) throw ConfigError("bottom MLP layer width is zero");
    for (uint32_t w : top_dims)
        if (w == 0) throw ConfigError("top MLP layer width is zero");
    if (bottom_dims.back() != embed_dim)
        throw ConfigError("bottom MLP must end in embed_dim so interaction operands match");
    if (top_dims.back() != 1) throw ConfigError("top MLP must end in a single logit");
    if (!(learning_rate > 0.0f) || !std::isfinite(learning_rate))
        throw ConfigError("learning rate must be positive and finite");
}

uint64_t DlrmConfig::dense_param_count() const {
    uint64_t count = 0;
    uint32_t in = num_dense;
    for (uint32_t out : bottom_dims) {
        count += uint64_t(out) * in + out;
        in = out;
    }
    in = top_input_dim();
    for (uint32_t out : top_dims) {
        count += uint64_t(out) * in + out;
        in = out;
    }
    return count;
}

DlrmConfig default_dlrm_config() {
    DlrmConfig cfg;
    cfg.num_dense = 13;
    cfg.num_sparse = 26;
    cfg.vocab_sizes.assign(26, 1000);
    cfg.embed_dim = 16;
    cfg.bottom_dims = {64, 16};
    cfg.top_dims = {64, 1};
    cfg.learning_rate = 0.1f;
    cfg.seed = 1;
    return cfg;
}

}  // namespace efl
