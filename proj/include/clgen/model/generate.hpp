#pragma once

#include "clgen/common/rng.hpp"
#include "clgen/model/transformer.hpp"

#include <span>
#include <vector>

namespace clgen::model {

struct SamplingOptions {
    double top_p = 0.9;
    int max_new_tokens = 40;
    int eos_id = -1;
    int pad_id = 0;
};

/// Draws an index from softmax(logits) restricted to the smallest
/// probability-sorted set with cumulative mass >= top_p.
int sample_nucleus(std::span<const double> logits, double top_p, Rng& rng);

/// Continues `prefix` until EOS or max_new_tokens; returns only the new
/// tokens, without the terminating EOS.
std::vector<int> generate_nucleus(const TransformerLM& model, std::span<const int> prefix,
                                  const SamplingOptions& opts, Rng& rng);

/// Batched variant; rngs[i] drives sequence i, so the result for one prefix
/// does not depend on which other prefixes share its batch.
std::vector<std::vector<int>> generate_nucleus_batch(const TransformerLM& model,
                                                     const std::vector<std::vector<int>>& prefixes,
                                                     const SamplingOptions& opts, std::span<Rng> rngs);

} // namespace clgen::model
