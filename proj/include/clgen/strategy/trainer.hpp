#pragma once

#include "clgen/data/replay.hpp"
#include "clgen/data/tokenizer.hpp"
#include "clgen/strategy/config.hpp"
#include "clgen/strategy/objectives.hpp"
#include "clgen/strategy/optimizer.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace clgen::strategy {

struct TrainOptions {
    std::uint64_t seed = 1;
    /// Log the numerical rank of the sentence representations every this
    /// many steps; 0 disables.
    int rank_every = 0;
    double rank_rel_tol = 1e-2;
    /// Needed by the discrete replay augmentations.
    const data::Tokenizer* tokenizer = nullptr;
    data::FormatOptions format;
};

struct StepRecord {
    std::size_t step = 0;
    std::string domain;
    double l_theta = 0.0;
    std::optional<double> l_bnnm;
    std::optional<double> l_ewc;
    std::optional<int> rank;
    double grad_norm = 0.0;
    std::size_t rows = 0;
};

/// Runs one strategy over a curriculum, one domain at a time. Replay memory
/// and the Fisher anchor carry over between domains; optimizer moments are
/// reset at the start of each domain.
class ContinualTrainer {
public:
    ContinualTrainer(StrategyConfig config, TrainOptions options);

    /// Trains on one domain for the configured epochs, then updates the
    /// replay memory (replay strategies) or the Fisher anchor (EWC).
    void train_domain(model::TransformerLM& model, const std::string& domain,
                      const std::vector<data::Example>& examples);

    const StrategyConfig& config() const noexcept { return config_; }
    const data::ReplayMemory& replay() const noexcept { return replay_; }
    const std::optional<FisherAnchor>& anchor() const noexcept { return anchor_; }
    const std::vector<StepRecord>& log() const noexcept { return log_; }
    std::size_t domains_trained() const noexcept { return domain_index_; }

private:
    StepRecord step(model::TransformerLM& model, const std::string& domain,
                    const std::vector<const data::Example*>& current, Rng& drop_rng, Rng& mix_rng, Rng& aux_rng);
    std::vector<const data::Example*> replay_rows(Rng& rng) const;
    void finish_domain(model::TransformerLM& model, const std::string& domain,
                       const std::vector<data::Example>& examples);

    StrategyConfig config_;
    TrainOptions options_;
    data::ReplayMemory replay_;
    std::optional<FisherAnchor> anchor_;
    AdamWState optimizer_;
    std::vector<StepRecord> log_;
    std::vector<data::Example> augmented_;
    std::size_t domain_index_ = 0;
    std::size_t step_ = 0;
};

} // namespace clgen::strategy
