// Copyright (C) 2026 The streamvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "streamvad/backend.hpp"

namespace streamvad::backend {

struct ToyModelConfig {
    std::size_t layers = 2;
    std::size_t heads = 4;
    std::size_t head_dim = 16;
    std::size_t mlp_hidden = 128;
    double rope_base = 10000.0;
    std::uint64_t seed = 20240601;

    std::size_t model_dim() const noexcept {
        return heads * head_dim;
    }
};

/// Pre-rotation projections captured during prefill, indexed [layer][new row][channel].
struct PrefillTrace {
    std::vector<std::vector<std::vector<double>>> raw_keys;
    std::vector<std::vector<std::vector<double>>> raw_queries;
    std::vector<std::vector<std::vector<double>>> values;
};

/// Tiny decoder-only transformer with fixed-seed random weights: pre-norm blocks of multi-head
/// causal attention with rotary positions and a GELU MLP, greedy decoding over the 64-symbol
/// character vocabulary. Visual tokens enter through a seeded linear projection.
class ToyModelBackend : public Backend {
public:
    explicit ToyModelBackend(ToyModelConfig config = {});

    std::string_view name() const override {
        return "toy";
    }
    BackendCapabilities capabilities() const override {
        return {true, true};
    }
    hsm::CacheGeometry cache_geometry() const override;
    void prefill_text(hsm::SegmentedKVCache& cache, std::string_view text, hsm::Segment segment) override;
    void prefill_visual(hsm::SegmentedKVCache& cache, std::span<const iim::VisualToken> tokens) override;
    GenerationResult decode(hsm::SegmentedKVCache& cache, const DecodeRequest& request) override;

    const ToyModelConfig& config() const noexcept {
        return m_config;
    }

    std::vector<double> embed_text(int token) const;
    std::vector<double> embed_visual(const iim::VisualToken& token);

    /// Runs the model over `embeddings` (model_dim each), appending one row per embedding.
    /// `trace`, when given, receives the raw projections of the new rows.
    void prefill_embeddings(hsm::SegmentedKVCache& cache, const std::vector<std::vector<double>>& embeddings,
                            hsm::Segment segment, PrefillTrace* trace = nullptr);

    /// Next-token logits after the most recent prefill or decode step.
    const std::vector<double>& last_logits() const noexcept {
        return m_last_logits;
    }

private:
    struct Layer {
        std::vector<double> wq, wk, wv, wo;  // model_dim x model_dim, row-major
        std::vector<double> w1;              // mlp_hidden x model_dim
        std::vector<double> w2;              // model_dim x mlp_hidden
    };

    void forward(hsm::SegmentedKVCache& cache, std::vector<double> x, hsm::Segment segment, PrefillTrace* trace);
    const std::vector<double>& visual_projection(std::size_t channels);

    ToyModelConfig m_config;
    std::vector<double> m_embedding;  // vocab x model_dim
    std::vector<Layer> m_layers;
    std::vector<double> m_lm_head;    // vocab x model_dim
    std::map<std::size_t, std::vector<double>> m_visual_projections;
    std::vector<double> m_last_logits;
};

}  // namespace streamvad::backend
