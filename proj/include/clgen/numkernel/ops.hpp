#pragma once

#include "clgen/numkernel/autodiff.hpp"
#include "clgen/numkernel/linalg.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace clgen::nk {

/// Per-position boolean mask stored as bytes (1 = active).
using Mask = std::vector<std::uint8_t>;

/// Target distribution placing weight_first on `first` and the remainder on
/// `second`. A one-hot target has weight_first == 1 (or first == second).
struct SoftTarget {
    int first = 0;
    int second = 0;
    double weight_first = 1.0;

    static SoftTarget one_hot(int token) { return {token, token, 1.0}; }
};

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
/// alpha * a + beta * b.
Var axpby(double alpha, const Var& a, double beta, const Var& b);
/// Adds a length-C vector to every row of a [..., C] tensor.
Var add_row_vector(const Var& a, const Var& b);
/// Elementwise product with a constant tensor (dropout masks).
Var mul_constant(const Var& a, const Tensor& c);
Var sum(const Var& a);
Var reshape(const Var& a, Shape shape);

/// [..., K] x [K, M] -> [..., M].
Var matmul(const Var& a, const Var& w);
/// [..., K] x [M, K]^T -> [..., M].
Var matmul_transposed(const Var& a, const Var& w);

Var softmax_rows(const Var& a);
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
/// tanh approximation of GELU.
Var gelu(const Var& x);

/// Rows of table [V, H] selected by ids; result shape is lead + {H}.
Var embedding(const Var& table, std::span<const int> ids, Shape lead);
Var gather_rows(const Var& a, std::span<const Index> rows);
Var concat_rows(const std::vector<Var>& parts);

/// Multi-head causal self-attention over [B, T, H] projections.
Var causal_self_attention(const Var& q, const Var& k, const Var& v, Index num_heads);

/// Mean over active positions of x [B, T, H]; mask has B*T entries.
Var masked_mean(const Var& x, const Mask& mask);
/// Single-query attention pooling: query [B, H] attends over keys/values
/// [B, T, H] restricted to active positions.
Var attention_pool(const Var& query, const Var& keys, const Var& values, const Mask& mask);

Var row_l2_normalize(const Var& z, NormalizeStats* stats = nullptr);
Var nuclear_norm(const Var& z);

/// Mean over active positions of -sum_v target_v * log softmax(logits)_v.
/// logits is [..., V]; targets and mask have one entry per row.
Var soft_cross_entropy(const Var& logits, std::span<const SoftTarget> targets, const Mask& mask);

/// sum_k weights_k * (x_k - anchor_k)^2.
Var weighted_squared_distance(const Var& x, const Tensor& anchor, const Tensor& weights);

} // namespace clgen::nk
