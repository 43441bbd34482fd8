// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamvad/toy_model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace streamvad::backend {

namespace {

std::vector<double> random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double scale) {
    std::normal_distribution<double> dist(0.0, scale);
    std::vector<double> m(rows * cols);
    for (double& v : m) {
        v = dist(rng);
    }
    return m;
}

std::vector<double> matvec(const std::vector<double>& m, std::span<const double> x, std::size_t rows) {
    const std::size_t cols = x.size();
    std::vector<double> y(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* row = m.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) {
            acc += row[c] * x[c];
        }
        y[r] = acc;
    }
    return y;
}

std::vector<double> rms_norm(const std::vector<double>& x) {
    double ss = 0.0;
    for (double v : x) {
        ss += v * v;
    }
    const double inv = 1.0 / std::sqrt(ss / static_cast<double>(x.size()) + 1e-6);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = x[i] * inv;
    }
    return y;
}

double gelu(double x) {
    return 0.5 * x * (1.0 + std::tanh(0.7978845608028654 * (x + 0.044715 * x * x * x)));
}

}  // namespace

ToyModelBackend::ToyModelBackend(ToyModelConfig config) : m_config(config) {
    const std::size_t dim = m_config.model_dim();
    std::mt19937_64 rng(m_config.seed);
    m_embedding = random_matrix(rng, kVocabSize, dim, 1.0);
    const double proj_scale = 1.0 / std::sqrt(static_cast<double>(dim));
    for (std::size_t l = 0; l < m_config.layers; ++l) {
        Layer layer;
        layer.wq = random_matrix(rng, dim, dim, proj_scale);
        layer.wk = random_matrix(rng, dim, dim, proj_scale);
        layer.wv = random_matrix(rng, dim, dim, proj_scale);
        layer.wo = random_matrix(rng, dim, dim, proj_scale);
        layer.w1 = random_matrix(rng, m_config.mlp_hidden, dim, proj_scale);
        layer.w2 = random_matrix(rng, dim, m_config.mlp_hidden, 1.0 / std::sqrt(static_cast<double>(m_config.mlp_hidden)));
        m_layers.push_back(std::move(layer));
    }
    m_lm_head = random_matrix(rng, kVocabSize, dim, proj_scale);
}

hsm::CacheGeometry ToyModelBackend::cache_geometry() const {
    return {m_config.layers, m_config.heads, m_config.head_dim, m_config.rope_base};
}

std::vector<double> ToyModelBackend::embed_text(int token) const {
    const std::size_t dim = m_config.model_dim();
    const auto begin = m_embedding.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(token) * dim);
    return std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(dim));
}

const std::vector<double>& ToyModelBackend::visual_projection(std::size_t channels) {
    auto it = m_visual_projections.find(channels);
    if (it == m_visual_projections.end()) {
        std::mt19937_64 rng(m_config.seed ^ (0x9e3779b97f4a7c15ULL * (channels + 1)));
        it = m_visual_projections
                 .emplace(channels, random_matrix(rng, m_config.model_dim(), channels,
                                                  1.0 / std::sqrt(static_cast<double>(channels))))
                 .first;
    }
    return it->second;
}

std::vector<double> ToyModelBackend::embed_visual(const iim::VisualToken& token) {
    std::vector<double> feature(token.feature.begin(), token.feature.end());
    return matvec(visual_projection(feature.size()), feature, m_config.model_dim());
}

void ToyModelBackend::forward(hsm::SegmentedKVCache& cache, std::vector<double> x, hsm::Segment segment,
                              PrefillTrace* trace) {
    const std::size_t dim = m_config.model_dim();
    const std::size_t hd = m_config.head_dim;
    const std::int64_t pos = cache.next_position();
    const std::size_t row = cache.append_row(pos, segment);
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    for (std::size_t l = 0; l < m_layers.size(); ++l) {
        const Layer& layer = m_layers[l];
        const auto h = rms_norm(x);
        auto q = matvec(layer.wq, h, dim);
        auto k = matvec(layer.wk, h, dim);
        auto v = matvec(layer.wv, h, dim);
        if (trace) {
            trace->raw_queries[l].push_back(q);
            trace->raw_keys[l].push_back(k);
            trace->values[l].push_back(v);
        }
        for (std::size_t head = 0; head < m_config.heads; ++head) {
            hsm::rope_rotate_inplace(std::span<double>(q).subspan(head * hd, hd), pos, m_config.rope_base);
            hsm::rope_rotate_inplace(std::span<double>(k).subspan(head * hd, hd), pos, m_config.rope_base);
        }
        std::copy(k.begin(), k.end(), cache.mutable_key(l, row).begin());
        std::copy(v.begin(), v.end(), cache.mutable_value(l, row).begin());

        std::vector<double> attn(dim, 0.0);
        std::vector<double> logits(row + 1);
        for (std::size_t head = 0; head < m_config.heads; ++head) {
            const auto qh = std::span<const double>(q).subspan(head * hd, hd);
            double max_logit = -INFINITY;
            for (std::size_t r = 0; r <= row; ++r) {
                const auto kh = cache.head_key(l, r, head);
                double dotp = 0.0;
                for (std::size_t c = 0; c < hd; ++c) {
                    dotp += qh[c] * kh[c];
                }
                logits[r] = dotp * scale;
                max_logit = std::max(max_logit, logits[r]);
            }
            double total = 0.0;
            for (std::size_t r = 0; r <= row; ++r) {
                logits[r] = std::exp(logits[r] - max_logit);
                total += logits[r];
            }
            for (std::size_t r = 0; r <= row; ++r) {
                const auto vh = cache.head_value(l, r, head);
                const double p = logits[r] / total;
                for (std::size_t c = 0; c < hd; ++c) {
                    attn[head * hd + c] += p * vh[c];
                }
            }
        }
        const auto projected = matvec(layer.wo, attn, dim);
        for (std::size_t i = 0; i < dim; ++i) {
            x[i] += projected[i];
        }
        auto hidden = matvec(layer.w1, rms_norm(x), m_config.mlp_hidden);
        for (double& value : hidden) {
            value = gelu(value);
        }
        const auto mlp = matvec(layer.w2, hidden, dim);
        for (std::size_t i = 0; i < dim; ++i) {
            x[i] += mlp[i];
        }
    }
    m_last_logits = matvec(m_lm_head, rms_norm(x), kVocabSize);
}

void ToyModelBackend::prefill_embeddings(hsm::SegmentedKVCache& cache, const std::vector<std::vector<double>>& embeddings,
                                         hsm::Segment segment, PrefillTrace* trace) {
    if (!(cache.geometry() == cache_geometry())) {
        throw hsm::HsmError(hsm::HsmErrorKind::kGeometryMismatch, "cache geometry does not match the toy model");
    }
    if (trace) {
        trace->raw_keys.resize(m_config.layers);
        trace->raw_queries.resize(m_config.layers);
        trace->values.resize(m_config.layers);
    }
    for (const auto& e : embeddings) {
        forward(cache, e, segment, trace);
    }
}

void ToyModelBackend::prefill_text(hsm::SegmentedKVCache& cache, std::string_view text, hsm::Segment segment) {
    std::vector<std::vector<double>> embeddings;
    for (int token : tokenize(text)) {
        embeddings.push_back(embed_text(token));
    }
    prefill_embeddings(cache, embeddings, segment);
}

void ToyModelBackend::prefill_visual(hsm::SegmentedKVCache& cache, std::span<const iim::VisualToken> tokens) {
    std::vector<std::vector<double>> embeddings;
    embeddings.reserve(tokens.size());
    for (const auto& token : tokens) {
        embeddings.push_back(embed_visual(token));
    }
    prefill_embeddings(cache, embeddings, hsm::Segment::kVisual);
}

GenerationResult ToyModelBackend::decode(hsm::SegmentedKVCache& cache, const DecodeRequest& request) {
    if (cache.empty() || m_last_logits.empty()) {
        throw BackendError(BackendErrorKind::kCapability, "decode needs a prefilled cache");
    }
    const auto started = std::chrono::steady_clock::now();
    GenerationResult result;
    result.truncated = true;
    for (std::size_t step = 0; step < request.max_new_tokens; ++step) {
        const auto& logits = m_last_logits;
        const double max_logit = *std::max_element(logits.begin(), logits.end());
        std::vector<double> probs(logits.size());
        double total = 0.0;
        for (std::size_t i = 0; i < logits.size(); ++i) {
            probs[i] = std::exp(logits[i] - max_logit);
            total += probs[i];
        }
        std::size_t best = 0;
        std::size_t second = 1;
        if (probs[second] > probs[best]) {
            std::swap(best, second);
        }
        for (std::size_t i = 2; i < probs.size(); ++i) {
            if (probs[i] > probs[best]) {
                second = best;
                best = i;
            } else if (probs[i] > probs[second]) {
                second = i;
            }
        }
        result.token_probs.push_back(ProbabilityPair{probs[best] / total, probs[second] / total});
        ++result.token_count;
        const int token = static_cast<int>(best);
        if (token == kNewlineToken) {
            result.truncated = false;
            break;
        }
        result.text.push_back(char_for_token(token));
        forward(cache, embed_text(token), hsm::Segment::kGenerated, nullptr);
    }
    result.wall_time = std::chrono::steady_clock::now() - started;
    return result;
}

}  // namespace streamvad::backend
