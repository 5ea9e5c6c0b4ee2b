#include "clgen/augment/mixup.hpp"

#include "clgen/common/error.hpp"

#include <algorithm>
#include <random>

namespace clgen::augment {

using data::Tokenizer;

double sample_beta(double alpha, Rng& rng) {
    if (!(alpha > 0.0))
        throw InputError("mixup: alpha must be > 0");
    std::gamma_distribution<double> g(alpha, 1.0);
    for (;;) {
        const double x = g(rng), y = g(rng);
        if (x + y > 0.0)
            return x / (x + y);
    }
}

double sample_lambda(double alpha, Rng& rng) {
    const double x = sample_beta(alpha, rng);
    return std::max(x, 1.0 - x);
}

int sample_layer(int num_layers, Rng& rng) {
    if (num_layers < 1)
        throw InputError("mixup: layer count must be >= 1");
    std::uniform_int_distribution<int> d(0, num_layers);
    return d(rng);
}

MixupBatch build_mixup_batch(std::span<const data::Example* const> current,
                             std::span<const data::Example* const> replay, const MixupConfig& config,
                             int num_layers, Rng& rng) {
    if (current.empty() || replay.empty())
        throw InputError("mixup: both batches must be nonempty");
    MixupBatch out;
    out.lambda = sample_lambda(config.alpha, rng);
    out.layer = sample_layer(num_layers, rng);
    std::uniform_int_distribution<std::size_t> pick(0, current.size() - 1);
    for (std::size_t j = 0; j < replay.size(); ++j)
        out.specs.push_back({pick(rng), j, out.lambda, out.layer});

    std::vector<const data::Example*> left, right;
    Index length = 0;
    for (const auto& s : out.specs) {
        left.push_back(current[s.current_index]);
        right.push_back(replay[s.replay_index]);
        length = std::max({length, static_cast<Index>(left.back()->tokens.size()) - 1,
                           static_cast<Index>(right.back()->tokens.size()) - 1});
    }
    const data::TrainBatch a = data::make_train_batch(left, length);
    const data::TrainBatch b = data::make_train_batch(right, length);
    out.current = a.inputs;
    out.replay = b.inputs;
    out.targets.resize(a.targets.size());
    out.loss_mask.resize(a.targets.size());
    out.pool_mask.resize(a.targets.size());
    for (std::size_t i = 0; i < a.targets.size(); ++i) {
        out.targets[i] = {a.targets[i].first, b.targets[i].first, out.lambda};
        out.loss_mask[i] = a.loss_mask[i] | b.loss_mask[i];
        out.pool_mask[i] = a.inputs.pad_mask[i] | b.inputs.pad_mask[i];
    }
    return out;
}

} // namespace clgen::augment
