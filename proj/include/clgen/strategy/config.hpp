#pragma once

#include "clgen/data/record.hpp"

#include <cstddef>
#include <map>
#include <string>

namespace clgen::strategy {

enum class StrategyKind { Finetune, Replay, EWC, AGEM, TextMixup, TMBNNM, Multi };
enum class BnnmLevel { Sentence, Token };
/// Augmentation applied to replay exemplars by the plain Replay strategy.
enum class ReplayAugment { None, Delete, Insert, Swap, Substitute, Dropout };

StrategyKind parse_strategy_kind(const std::string& name);
std::string to_string(StrategyKind kind);
BnnmLevel parse_bnnm_level(const std::string& name);
std::string to_string(BnnmLevel level);
ReplayAugment parse_replay_augment(const std::string& name);
std::string to_string(ReplayAugment augment);

/// Strategies that keep a replay memory.
bool uses_replay(StrategyKind kind);
bool uses_mixup(StrategyKind kind);

struct StrategyConfig {
    std::string name;
    StrategyKind kind = StrategyKind::Finetune;

    double lr = 1e-3;
    int epochs = 5;
    std::size_t batch_size = 16;
    double weight_decay = 0.01;
    double clip_norm = 1.0;

    std::size_t memory = 5;
    double alpha = 0.6;
    double kappa = 0.4;
    BnnmLevel bnnm_level = BnnmLevel::Sentence;
    double ewc_lambda = 0.01;
    std::size_t fisher_samples = 256;
    ReplayAugment augment = ReplayAugment::None;
    double perturb_fraction = 0.1;
    double augment_dropout = 0.1;

    /// Defaults for `kind`; kappa depends on the corpus mode.
    static StrategyConfig defaults(StrategyKind kind, data::Mode mode);
    void validate() const;
};

/// Builds a config from string keys. `kind` is required; every other key
/// must be meaningful for that kind, otherwise InputError.
StrategyConfig parse_strategy_config(const std::string& name, const std::map<std::string, std::string>& keys,
                                     data::Mode mode);

} // namespace clgen::strategy
