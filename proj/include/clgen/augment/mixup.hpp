#pragma once

#include "clgen/common/rng.hpp"
#include "clgen/data/example.hpp"

#include <span>
#include <vector>

namespace clgen::augment {

using nk::Index;

struct MixupConfig {
    double alpha = 0.6;
};

/// Symmetric Beta(alpha, alpha) draw via two gamma variates.
double sample_beta(double alpha, Rng& rng);
/// Beta(alpha, alpha) folded onto [0.5, 1] by max(x, 1 - x).
double sample_lambda(double alpha, Rng& rng);
/// Uniform layer index in [0, num_layers].
int sample_layer(int num_layers, Rng& rng);

struct MixSpec {
    std::size_t current_index = 0;
    std::size_t replay_index = 0;
    double lambda = 1.0;
    int layer = 0;
};

/// Virtual samples for one step. Row r interpolates current[specs[r].current_index]
/// (weight lambda) with replay[specs[r].replay_index]. Both token matrices
/// share one padded length; targets are two-hot per position.
struct MixupBatch {
    std::vector<MixSpec> specs;
    double lambda = 1.0;
    int layer = 0;
    model::TokenBatch current;
    model::TokenBatch replay;
    std::vector<nk::SoftTarget> targets;
    nk::Mask loss_mask;
    /// Positions real in either member; used for pooling the mixed rows.
    nk::Mask pool_mask;

    Index size() const { return current.batch; }
};

/// Pairs every replay exemplar with a uniformly drawn current example. One
/// lambda and one layer are shared by the whole batch.
MixupBatch build_mixup_batch(std::span<const data::Example* const> current,
                             std::span<const data::Example* const> replay, const MixupConfig& config,
                             int num_layers, Rng& rng);

} // namespace clgen::augment
