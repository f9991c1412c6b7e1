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

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "efl/common.hpp"
#include "efl/rng.hpp"

namespace efl {

// A DLRM click-probability model: per-feature embedding tables, a bottom MLP
// over the dense features, pairwise dot-product interactions, and a top MLP
// ending in one logit. Everything is templated on the scalar type: float is
// the production width, double exists for gradient checking. All functions
// are pure or single-owner mutating; nothing here is thread-aware.

struct Record {
    std::vector<float> dense;
    std::vector<uint32_t> sparse;
    uint8_t label = 0;
};

struct DlrmConfig {
    uint16_t num_dense = 13;
    uint16_t num_sparse = 26;
    std::vector<uint32_t> vocab_sizes;   // one entry per sparse feature
    uint32_t embed_dim = 16;
    std::vector<uint32_t> bottom_dims;   // layer output widths; input is num_dense
    std::vector<uint32_t> top_dims;      // layer output widths; input is derived
    float learning_rate = 0.1f;
    uint64_t seed = 1;

    // ConfigError on any inconsistency.
    void validate() const;

    uint32_t interaction_count() const {
        uint32_t n = num_sparse + 1u;
        return n * (n - 1u) / 2u;
    }
    uint32_t top_input_dim() const { return embed_dim + interaction_count(); }
    uint64_t dense_param_count() const;

    bool operator==(const DlrmConfig&) const = default;
};

// The desk-scale default: 13 dense, 26 tables of 1000 rows, d=16,
// bottom 13->64->16, top 367->64->1.
DlrmConfig default_dlrm_config();

template <typename T>
struct Mat {
    uint32_t rows = 0, cols = 0;
    std::vector<T> a;

    Mat() = default;
    Mat(uint32_t r, uint32_t c) : rows(r), cols(c), a(size_t(r) * c, T(0)) {}
    T& at(uint32_t r, uint32_t c) { return a[size_t(r) * cols + c]; }
    const T& at(uint32_t r, uint32_t c) const { return a[size_t(r) * cols + c]; }
    std::span<T> row(uint32_t r) { return {a.data() + size_t(r) * cols, cols}; }
    std::span<const T> row(uint32_t r) const { return {a.data() + size_t(r) * cols, cols}; }
    bool operator==(const Mat&) const = default;
};

template <typename T>
struct MlpLayer {
    Mat<T> w;            // out x in, row-major
    std::vector<T> b;    // out
    bool operator==(const MlpLayer&) const = default;
};

template <typename T>
struct ModelParamsT {
    std::vector<Mat<T>> tables;       // vocab_sizes[i] x embed_dim
    std::vector<MlpLayer<T>> bottom;
    std::vector<MlpLayer<T>> top;
    uint64_t version = 0;
    bool operator==(const ModelParamsT&) const = default;
};

template <typename T>
struct SparseRowGrad {
    uint16_t table = 0;
    uint32_t row = 0;
    std::vector<T> g;  // embed_dim
    bool operator==(const SparseRowGrad&) const = default;
};

// Gradient of the mean batch loss. Dense part mirrors the MLP shapes; the
// sparse part lists only the embedding rows the batch touched, sorted by
// (table, row) with no duplicates.
template <typename T>
struct GradientDeltaT {
    std::vector<MlpLayer<T>> bottom;
    std::vector<MlpLayer<T>> top;
    std::vector<SparseRowGrad<T>> sparse;
    uint64_t batch_size = 0;
    bool operator==(const GradientDeltaT&) const = default;
};

template <typename T>
struct ForwardCacheT {
    uint64_t params_version = 0;
    Mat<T> dense_in;                      // batch x num_dense
    std::vector<uint32_t> sparse_idx;     // batch x num_sparse, row-major
    std::vector<Mat<T>> bottom_pre, bottom_act;
    std::vector<Mat<T>> embeds;           // per table: batch x embed_dim
    Mat<T> top_in;                        // batch x top_input_dim
    std::vector<Mat<T>> top_pre, top_act;
    std::vector<T> logits;
    std::vector<double> probs;            // unclamped sigmoid, double
};

using ModelParams = ModelParamsT<float>;
using GradientDelta = GradientDeltaT<float>;
using ForwardCache = ForwardCacheT<float>;

namespace detail {

inline double sigmoid(double z) {
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

inline constexpr double kBceClip = 1e-7;

}  // namespace detail

// Deterministic in cfg.seed. MLP weights uniform in +-sqrt(1/fan_in) with
// zero biases, embedding rows uniform in +-1/sqrt(d). Draw order: bottom
// layers, top layers, then tables, each row-major.
template <typename T>
ModelParamsT<T> init_params(const DlrmConfig& cfg) {
    cfg.validate();
    ModelParamsT<T> p;
    Rng rng(cfg.seed);

    auto make_mlp = [&](uint32_t in_dim, const std::vector<uint32_t>& dims) {
        std::vector<MlpLayer<T>> layers;
        for (uint32_t out_dim : dims) {
            MlpLayer<T> l;
            l.w = Mat<T>(out_dim, in_dim);
            double bound = std::sqrt(1.0 / in_dim);
            for (auto& v : l.w.a) v = T(rng.uniform(-bound, bound));
            l.b.assign(out_dim, T(0));
            layers.push_back(std::move(l));
            in_dim = out_dim;
        }
        return layers;
    };

    p.bottom = make_mlp(cfg.num_dense, cfg.bottom_dims);
    p.top = make_mlp(cfg.top_input_dim(), cfg.top_dims);

    double ebound = 1.0 / std::sqrt(double(cfg.embed_dim));
    for (uint32_t t = 0; t < cfg.num_sparse; ++t) {
        Mat<T> table(cfg.vocab_sizes[t], cfg.embed_dim);
        for (auto& v : table.a) v = T(rng.uniform(-ebound, ebound));
        p.tables.push_back(std::move(table));
    }
    p.version = 0;
    return p;
}

// Batch forward pass. Bottom MLP applies ReLU on every layer; the top MLP
// applies ReLU on all but the last, which stays linear and feeds a sigmoid.
// Probabilities are clamped into the open interval (0,1) at type resolution.
template <typename T>
std::pair<std::vector<T>, ForwardCacheT<T>> forward(const ModelParamsT<T>& params,
                                                    const DlrmConfig& cfg,
                                                    std::span<const Record> batch) {
    if (batch.empty()) throw ShapeError("forward: empty batch");
    const uint32_t n = uint32_t(batch.size());
    const uint32_t d = cfg.embed_dim;

    ForwardCacheT<T> cache;
    cache.params_version = params.version;
    cache.dense_in = Mat<T>(n, cfg.num_dense);
    cache.sparse_idx.resize(size_t(n) * cfg.num_sparse);

    for (uint32_t s = 0; s < n; ++s) {
        const Record& r = batch[s];
        if (r.dense.size() != cfg.num_dense)
            throw ShapeError("forward: record dense width mismatch");
        if (r.sparse.size() != cfg.num_sparse)
            throw ShapeError("forward: record sparse width mismatch");
        for (uint32_t j = 0; j < cfg.num_dense; ++j) cache.dense_in.at(s, j) = T(r.dense[j]);
        for (uint32_t t = 0; t < cfg.num_sparse; ++t) {
            if (r.sparse[t] >= cfg.vocab_sizes[t])
                throw IndexError("forward: sparse index " + std::to_string(r.sparse[t]) +
                                 " out of range for table " + std::to_string(t));
            cache.sparse_idx[size_t(s) * cfg.num_sparse + t] = r.sparse[t];
        }
    }

    auto run_mlp = [&](const std::vector<MlpLayer<T>>& layers, const Mat<T>& input,
                       std::vector<Mat<T>>& pre_out, std::vector<Mat<T>>& act_out,
                       bool relu_last) {
        const Mat<T>* cur = &input;
        for (size_t l = 0; l < layers.size(); ++l) {
            const MlpLayer<T>& layer = layers[l];
            Mat<T> pre(n, layer.w.rows);
            for (uint32_t s = 0; s < n; ++s) {
                for (uint32_t o = 0; o < layer.w.rows; ++o) {
                    T acc = layer.b[o];
                    std::span<const T> wrow = layer.w.row(o);
                    for (uint32_t i = 0; i < layer.w.cols; ++i)
                        acc += wrow[i] * cur->at(s, i);
                    pre.at(s, o) = acc;
                }
            }
            Mat<T> act = pre;
            if (relu_last || l + 1 < layers.size()) {
                for (auto& v : act.a) v = v > T(0) ? v : T(0);
            }
            pre_out.push_back(std::move(pre));
            act_out.push_back(std::move(act));
            cur = &act_out.back();
        }
    };

    run_mlp(params.bottom, cache.dense_in, cache.bottom_pre, cache.bottom_act, true);
    const Mat<T>& z = cache.bottom_act.back();

    for (uint32_t t = 0; t < cfg.num_sparse; ++t) {
        Mat<T> e(n, d);
        for (uint32_t s = 0; s < n; ++s) {
            uint32_t row = cache.sparse_idx[size_t(s) * cfg.num_sparse + t];
            std::span<const T> src = params.tables[t].row(row);
            for (uint32_t j = 0; j < d; ++j) e.at(s, j) = src[j];
        }
        cache.embeds.push_back(std::move(e));
    }

    // feature vectors per sample: f_0 = z, f_i = e_i; dot products over the
    // upper triangle in (0,1), (0,2), ..., (1,2), ... order
    const uint32_t nf = cfg.num_sparse + 1;
    cache.top_in = Mat<T>(n, cfg.top_input_dim());
    for (uint32_t s = 0; s < n; ++s) {
        for (uint32_t j = 0; j < d; ++j) cache.top_in.at(s, j) = z.at(s, j);
        uint32_t k = d;
        for (uint32_t i = 0; i < nf; ++i) {
            for (uint32_t j = i + 1; j < nf; ++j) {
                const Mat<T>& fi = (i == 0) ? z : cache.embeds[i - 1];
                const Mat<T>& fj = cache.embeds[j - 1];
                T dot = T(0);
                for (uint32_t c = 0; c < d; ++c) dot += fi.at(s, c) * fj.at(s, c);
                cache.top_in.at(s, k++) = dot;
            }
        }
    }

    run_mlp(params.top, cache.top_in, cache.top_pre, cache.top_act, false);

    cache.logits.resize(n);
    cache.probs.resize(n);
    std::vector<T> probs(n);
    const T lo = std::numeric_limits<T>::min();
    const T hi = T(1) - std::numeric_limits<T>::epsilon() / 2;
    for (uint32_t s = 0; s < n; ++s) {
        T logit = cache.top_act.back().at(s, 0);
        cache.logits[s] = logit;
        double p = detail::sigmoid(double(logit));
        cache.probs[s] = p;
        T pt = T(p);
        if (!(pt > T(0))) pt = lo;
        if (!(pt < T(1))) pt = hi;
        probs[s] = pt;
    }
    return {std::move(probs), std::move(cache)};
}

// Mean binary cross-entropy with probabilities clipped to [1e-7, 1-1e-7].
template <typename T>
double bce_loss(std::span<const T> probs, std::span<const uint8_t> labels) {
    if (probs.size() != labels.size()) throw ShapeError("bce_loss: length mismatch");
    if (probs.empty()) throw ShapeError("bce_loss: empty input");
    double sum = 0;
    for (size_t i = 0; i < probs.size(); ++i) {
        double p = std::min(std::max(double(probs[i]), detail::kBceClip),
                            1.0 - detail::kBceClip);
        sum += labels[i] ? -std::log(p) : -std::log(1.0 - p);
    }
    return sum / double(probs.size());
}

// Exact gradient of bce_loss(forward(params, batch)) w.r.t. every parameter,
// mean-reduced over the batch. Backprop runs in double regardless of T;
// results are stored at parameter precision.
template <typename T>
GradientDeltaT<T> backward(const ModelParamsT<T>& params, const DlrmConfig& cfg,
                           const ForwardCacheT<T>& cache,
                           std::span<const uint8_t> labels) {
    if (cache.params_version != params.version)
        throw CacheError("backward: cache was built for params version " +
                         std::to_string(cache.params_version) + ", have " +
                         std::to_string(params.version));
    const uint32_t n = cache.dense_in.rows;
    if (labels.size() != n) throw ShapeError("backward: labels length mismatch");
    const uint32_t d = cfg.embed_dim;
    const uint32_t nf = cfg.num_sparse + 1;

    GradientDeltaT<T> delta;
    delta.batch_size = n;

    // dL/dlogit = (p - y) / n on the unclipped interior, 0 where the loss clip
    // flattens the objective
    std::vector<double> dlogit(n);
    for (uint32_t s = 0; s < n; ++s) {
        double p = cache.probs[s];
        bool interior = p > detail::kBceClip && p < 1.0 - detail::kBceClip;
        dlogit[s] = interior ? (p - double(labels[s])) / double(n) : 0.0;
    }

    struct LayerGrad {
        Mat<double> w;
        std::vector<double> b;
    };

    // walks one MLP backwards; dout is d(loss)/d(post-activation output)
    auto backprop_mlp = [&](const std::vector<MlpLayer<T>>& layers,
                            const std::vector<Mat<T>>& pres, const Mat<T>& input,
                            const std::vector<Mat<T>>& acts, Mat<double> dout,
                            bool relu_last, std::vector<LayerGrad>& grads) -> Mat<double> {
        grads.resize(layers.size());
        for (int l = int(layers.size()) - 1; l >= 0; --l) {
            const MlpLayer<T>& layer = layers[size_t(l)];
            const Mat<T>& pre = pres[size_t(l)];
            // gate through ReLU unless this is a linear output layer
            if (relu_last || l + 1 < int(layers.size())) {
                for (uint32_t s = 0; s < n; ++s)
                    for (uint32_t o = 0; o < layer.w.rows; ++o)
                        if (!(pre.at(s, o) > T(0))) dout.at(s, o) = 0.0;
            }
            LayerGrad& g = grads[size_t(l)];
            g.w = Mat<double>(layer.w.rows, layer.w.cols);
            g.b.assign(layer.w.rows, 0.0);
            const Mat<T>& in_act = (l == 0) ? input : acts[size_t(l) - 1];
            for (uint32_t s = 0; s < n; ++s) {
                for (uint32_t o = 0; o < layer.w.rows; ++o) {
                    double dp = dout.at(s, o);
                    if (dp == 0.0) continue;
                    g.b[o] += dp;
                    for (uint32_t i = 0; i < layer.w.cols; ++i)
                        g.w.at(o, i) += dp * double(in_act.at(s, i));
                }
            }
            Mat<double> din(n, layer.w.cols);
            for (uint32_t s = 0; s < n; ++s)
                for (uint32_t o = 0; o < layer.w.rows; ++o) {
                    double dp = dout.at(s, o);
                    if (dp == 0.0) continue;
                    for (uint32_t i = 0; i < layer.w.cols; ++i)
                        din.at(s, i) += dp * double(layer.w.at(o, i));
                }
            if (l == 0) return din;
            dout = std::move(din);
        }
        return Mat<double>(0, 0);  // layer stacks are never empty
    };

    // top MLP
    Mat<double> dtop_out(n, 1);
    for (uint32_t s = 0; s < n; ++s) dtop_out.at(s, 0) = dlogit[s];
    std::vector<LayerGrad> top_grads;
    Mat<double> dtop_in = backprop_mlp(params.top, cache.top_pre, cache.top_in,
                                       cache.top_act, std::move(dtop_out), false,
                                       top_grads);

    // split into the direct z path and the interaction terms
    const Mat<T>& z = cache.bottom_act.back();
    Mat<double> dfv(n, size_t(nf) * d);  // d(loss)/d(feature vector) per sample
    for (uint32_t s = 0; s < n; ++s) {
        for (uint32_t j = 0; j < d; ++j) dfv.at(s, j) = dtop_in.at(s, j);
        uint32_t k = d;
        for (uint32_t i = 0; i < nf; ++i) {
            for (uint32_t j2 = i + 1; j2 < nf; ++j2) {
                double g = dtop_in.at(s, k++);
                if (g == 0.0) continue;
                const Mat<T>& fi = (i == 0) ? z : cache.embeds[i - 1];
                const Mat<T>& fj = cache.embeds[j2 - 1];
                for (uint32_t c = 0; c < d; ++c) {
                    dfv.at(s, size_t(i) * d + c) += g * double(fj.at(s, c));
                    dfv.at(s, size_t(j2) * d + c) += g * double(fi.at(s, c));
                }
            }
        }
    }

    // bottom MLP: f_0 carries both the direct path and interaction pressure
    Mat<double> dz(n, d);
    for (uint32_t s = 0; s < n; ++s)
        for (uint32_t c = 0; c < d; ++c) dz.at(s, c) = dfv.at(s, c);
    std::vector<LayerGrad> bottom_grads;
    backprop_mlp(params.bottom, cache.bottom_pre, cache.dense_in, cache.bottom_act,
                 std::move(dz), true, bottom_grads);

    // embedding rows: accumulate per (table, row), deduplicated by the map
    std::map<std::pair<uint16_t, uint32_t>, std::vector<double>> sparse_acc;
    for (uint32_t t = 0; t < cfg.num_sparse; ++t) {
        for (uint32_t s = 0; s < n; ++s) {
            uint32_t row = cache.sparse_idx[size_t(s) * cfg.num_sparse + t];
            auto& acc = sparse_acc[{uint16_t(t), row}];
            if (acc.empty()) acc.assign(d, 0.0);
            for (uint32_t c = 0; c < d; ++c)
                acc[c] += dfv.at(s, size_t(t + 1) * d + c);
        }
    }

    auto to_t_layers = [&](const std::vector<LayerGrad>& grads) {
        std::vector<MlpLayer<T>> out;
        for (const LayerGrad& g : grads) {
            MlpLayer<T> l;
            l.w = Mat<T>(g.w.rows, g.w.cols);
            for (size_t i = 0; i < g.w.a.size(); ++i) l.w.a[i] = T(g.w.a[i]);
            l.b.resize(g.b.size());
            for (size_t i = 0; i < g.b.size(); ++i) l.b[i] = T(g.b[i]);
            out.push_back(std::move(l));
        }
        return out;
    };
    delta.bottom = to_t_layers(bottom_grads);
    delta.top = to_t_layers(top_grads);
    for (auto& [key, acc] : sparse_acc) {
        SparseRowGrad<T> sg;
        sg.table = key.first;
        sg.row = key.second;
        sg.g.resize(d);
        for (uint32_t c = 0; c < d; ++c) sg.g[c] = T(acc[c]);
        delta.sparse.push_back(std::move(sg));
    }
    return delta;
}

// p <- p - lr * g on the dense part and on exactly the rows the delta names.
// Bumps the version. ShapeError on any mismatch.
template <typename T>
void sgd_apply(ModelParamsT<T>& params, const GradientDeltaT<T>& grad, T lr) {
    if (!(lr > T(0))) throw ConfigError("sgd_apply: learning rate must be positive");
    if (grad.bottom.size() != params.bottom.size() || grad.top.size() != params.top.size())
        throw ShapeError("sgd_apply: layer count mismatch");

    auto apply_layers = [&](std::vector<MlpLayer<T>>& dst,
                            const std::vector<MlpLayer<T>>& g) {
        for (size_t l = 0; l < dst.size(); ++l) {
            if (g[l].w.rows != dst[l].w.rows || g[l].w.cols != dst[l].w.cols ||
                g[l].b.size() != dst[l].b.size())
                throw ShapeError("sgd_apply: layer shape mismatch");
            for (size_t i = 0; i < dst[l].w.a.size(); ++i) {
                dst[l].w.a[i] -= lr * g[l].w.a[i];
                if (!std::isfinite(double(dst[l].w.a[i])))
                    throw ShapeError("sgd_apply: non-finite weight after update");
            }
            for (size_t i = 0; i < dst[l].b.size(); ++i) {
                dst[l].b[i] -= lr * g[l].b[i];
                if (!std::isfinite(double(dst[l].b[i])))
                    throw ShapeError("sgd_apply: non-finite bias after update");
            }
        }
    };
    apply_layers(params.bottom, grad.bottom);
    apply_layers(params.top, grad.top);

    for (const auto& sg : grad.sparse) {
        if (sg.table >= params.tables.size())
            throw ShapeError("sgd_apply: table index out of range");
        Mat<T>& table = params.tables[sg.table];
        if (sg.row >= table.rows || sg.g.size() != table.cols)
            throw ShapeError("sgd_apply: sparse row shape mismatch");
        std::span<T> row = table.row(sg.row);
        for (size_t c = 0; c < row.size(); ++c) {
            row[c] -= lr * sg.g[c];
            if (!std::isfinite(double(row[c])))
                throw ShapeError("sgd_apply: non-finite embedding after update");
        }
    }
    params.version += 1;
}

// Spans over every dense parameter array in canonical order (bottom w/b,
// top w/b). Lets tests and serializers walk params and deltas in lockstep.
template <typename T>
std::vector<std::span<T>> dense_views(ModelParamsT<T>& p) {
    std::vector<std::span<T>> v;
    for (auto& l : p.bottom) {
        v.push_back(std::span<T>(l.w.a));
        v.push_back(std::span<T>(l.b));
    }
    for (auto& l : p.top) {
        v.push_back(std::span<T>(l.w.a));
        v.push_back(std::span<T>(l.b));
    }
    return v;
}

template <typename T>
std::vector<std::span<T>> dense_views(GradientDeltaT<T>& g) {
    std::vector<std::span<T>> v;
    for (auto& l : g.bottom) {
        v.push_back(std::span<T>(l.w.a));
        v.push_back(std::span<T>(l.b));
    }
    for (auto& l : g.top) {
        v.push_back(std::span<T>(l.w.a));
        v.push_back(std::span<T>(l.b));
    }
    return v;
}

}  // namespace efl
