#pragma once

#include "clgen/common/rng.hpp"
#include "clgen/numkernel/ops.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace clgen::model {

using nk::Index;
using nk::Mask;
using nk::Var;

struct ModelConfig {
    int num_layers = 4;
    int num_heads = 4;
    int hidden = 128;
    int vocab_size = 0;
    int max_seq_len = 80;
    double dropout = 0.1;

    void validate() const;
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Right-padded token matrix. pad_mask is 1 at real tokens.
struct TokenBatch {
    Index batch = 0;
    Index length = 0;
    std::vector<int> ids;
    Mask pad_mask;

    /// Pads every sequence with pad_id to `length` (0 = longest sequence).
    static TokenBatch from_sequences(const std::vector<std::vector<int>>& seqs, int pad_id, Index length = 0);

    int at(Index b, Index t) const { return ids[static_cast<std::size_t>(b * length + t)]; }
    bool real(Index b, Index t) const { return pad_mask[static_cast<std::size_t>(b * length + t)] != 0; }
};

/// Replace the hidden state at `layer` by lambda * h + (1 - lambda) * partner
/// before the remaining layers run.
struct MixInjection {
    int layer = 0;
    double lambda = 1.0;
    Var partner;
};

struct ForwardOptions {
    bool training = false;
    /// Dropout rate override; negative means ModelConfig::dropout.
    double dropout = -1.0;
    Rng* rng = nullptr;
    std::optional<MixInjection> inject;
    /// Mask used for sentence pooling; defaults to the batch pad mask.
    const Mask* pool_mask = nullptr;
};

struct ForwardOutput {
    Var logits;                // [B, T, V]
    std::vector<Var> hiddens;  // L + 1 entries of [B, T, H]; 0 is the embedding output
    Var pooled;                // [B, H]
};

/// Small pre-LayerNorm decoder-only transformer with learned absolute
/// positions, a tied output embedding and an attention-pooling head.
class TransformerLM {
public:
    TransformerLM() = default;
    TransformerLM(const ModelConfig& config, std::uint64_t init_seed);

    const ModelConfig& config() const noexcept { return config_; }

    /// Differentiable forward pass; gradients flow into the parameters.
    ForwardOutput forward(nk::Tape& tape, const TokenBatch& batch, const ForwardOptions& opts = {});
    /// Forward pass with parameters recorded as constants.
    ForwardOutput infer(nk::Tape& tape, const TokenBatch& batch, const ForwardOptions& opts = {}) const;

    /// Hidden state at `layer` (0 = embeddings) without running later layers.
    Var hidden_at(nk::Tape& tape, const TokenBatch& batch, int layer, const ForwardOptions& opts = {});

    /// Gradient-free logits at positions[b] of each row b: [B, V].
    nk::RowMatrix next_logits(const TokenBatch& batch, std::span<const Index> positions) const;

    /// Attention pooling with the global average as query.
    Var sentence_pool(nk::Tape& tape, const Var& last_hidden, const Mask& pad_mask);

    std::vector<nk::Parameter>& parameters() noexcept { return params_; }
    const std::vector<nk::Parameter>& parameters() const noexcept { return params_; }
    nk::Parameter& parameter(const std::string& name);
    void zero_grad();
    std::size_t parameter_count() const;

    /// Sets the pooling projections to identity (used by tests).
    void set_pool_identity();

    /// Copies parameter values from `other`; names and shapes must match.
    void assign_values(const TransformerLM& other);

private:
    struct LayerIds {
        int ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, w_fc, b_fc, w_proj, b_proj;
    };

    template <typename ParamFn>
    ForwardOutput run(const TokenBatch& batch, const ForwardOptions& opts, int stop_layer, ParamFn&& param) const;
    template <typename ParamFn>
    Var pool(const Var& last_hidden, const Mask& pad_mask, ParamFn&& param) const;

    int add_param(std::string name, nk::Tensor value);

    ModelConfig config_;
    std::vector<nk::Parameter> params_;
    int tok_emb_ = -1, pos_emb_ = -1, lnf_g_ = -1, lnf_b_ = -1, pool_q_ = -1, pool_k_ = -1, pool_v_ = -1;
    std::vector<LayerIds> layers_;
};

/// Inverted-dropout mask: each entry is 0 with probability `rate`, else
/// 1 / (1 - rate).
nk::Tensor dropout_mask(const nk::Shape& shape, double rate, Rng& rng);

/// Mean over active positions of the cross-entropy against (one- or
/// two-hot) targets. logits is [B, T, V]; targets and loss_mask are B*T long.
Var lm_loss(const Var& logits, std::span<const nk::SoftTarget> targets, const Mask& loss_mask);

/// Stacks the hidden states of real tokens row-wise: [(sum of real), H].
Var token_matrix(const Var& last_hidden, const Mask& pad_mask);

} // namespace clgen::model
