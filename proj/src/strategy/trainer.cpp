#include "clgen/strategy/trainer.hpp"

#include "clgen/augment/mixup.hpp"
#include "clgen/augment/perturb.hpp"
#include "clgen/common/error.hpp"
#include "clgen/data/curriculum.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <numeric>

namespace clgen::strategy {

namespace {

double active_count(const nk::Mask& mask) {
    return static_cast<double>(std::count_if(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }));
}

// Token-weighted mean of per-part mean losses, i.e. the loss of the
// concatenated batch.
nk::Var pooled_mean(const std::vector<std::pair<nk::Var, double>>& parts) {
    double total = 0.0;
    for (const auto& part : parts)
        total += part.second;
    nk::Var acc = nk::scale(parts.front().first, parts.front().second / total);
    for (std::size_t i = 1; i < parts.size(); ++i)
        acc = nk::axpby(1.0, acc, parts[i].second / total, parts[i].first);
    return acc;
}

std::optional<augment::PerturbKind> perturb_kind(ReplayAugment a) {
    switch (a) {
    case ReplayAugment::Delete:
        return augment::PerturbKind::Delete;
    case ReplayAugment::Insert:
        return augment::PerturbKind::Insert;
    case ReplayAugment::Swap:
        return augment::PerturbKind::Swap;
    case ReplayAugment::Substitute:
        return augment::PerturbKind::Substitute;
    default:
        return std::nullopt;
    }
}

} // namespace

ContinualTrainer::ContinualTrainer(StrategyConfig config, TrainOptions options)
    : config_(std::move(config)), options_(options), replay_(config_.memory) {
    config_.validate();
    if (perturb_kind(config_.augment) && config_.kind == StrategyKind::Replay && !options_.tokenizer)
        throw InputError("strategy '" + config_.name + "': discrete augmentation needs a tokenizer");
}

std::vector<const data::Example*> ContinualTrainer::replay_rows(Rng& rng) const {
    if (!uses_replay(config_.kind) || replay_.empty())
        return {};
    std::vector<const data::Example*> all = replay_.exemplars();
    if (all.size() <= config_.batch_size)
        return all;
    std::vector<const data::Example*> picked;
    std::sample(all.begin(), all.end(), std::back_inserter(picked), config_.batch_size, rng);
    return picked;
}

void ContinualTrainer::train_domain(model::TransformerLM& model, const std::string& domain,
                                    const std::vector<data::Example>& examples) {
    if (examples.empty())
        throw InputError("train_domain: domain '" + domain + "' has no training data");
    const std::uint64_t d = domain_index_;
    Rng drop_rng = make_stream(options_.seed, "dropout", d);
    Rng mix_rng = make_stream(options_.seed, "mixup", d);
    Rng aux_rng = make_stream(options_.seed, "replay", d);
    optimizer_ = AdamWState{};
    for (int epoch = 0; epoch < config_.epochs; ++epoch) {
        Rng shuffle = make_stream(options_.seed, "shuffle", d * 1000 + static_cast<std::uint64_t>(epoch));
        for (const auto& idx : data::make_batches(examples.size(), config_.batch_size, shuffle)) {
            std::vector<const data::Example*> current;
            for (std::size_t i : idx)
                current.push_back(&examples[i]);
            log_.push_back(step(model, domain, current, drop_rng, mix_rng, aux_rng));
        }
    }
    finish_domain(model, domain, examples);
    ++domain_index_;
    spdlog::debug("{}: finished domain {} after {} steps", config_.name, domain, step_);
}

StepRecord ContinualTrainer::step(model::TransformerLM& model, const std::string& domain,
                                  const std::vector<const data::Example*>& current, Rng& drop_rng, Rng& mix_rng,
                                  Rng& aux_rng) {
    StepRecord rec;
    rec.step = step_++;
    rec.domain = domain;

    const auto replay = replay_rows(aux_rng);
    const bool agem = config_.kind == StrategyKind::AGEM;

    std::vector<const data::Example*> plain = current;
    if (!agem)
        plain.insert(plain.end(), replay.begin(), replay.end());
    augmented_.clear();
    if (config_.kind == StrategyKind::Replay && !replay.empty()) {
        if (const auto kind = perturb_kind(config_.augment)) {
            for (const data::Example* ex : replay)
                augmented_.push_back(augment::perturb_example(*ex, *kind, config_.perturb_fraction,
                                                              *options_.tokenizer, options_.format, aux_rng));
            for (const auto& ex : augmented_)
                plain.push_back(&ex);
        }
    }

    model::ForwardOptions train_opts;
    train_opts.training = true;
    train_opts.rng = &drop_rng;

    model.zero_grad();
    Eigen::VectorXd g_ref;
    if (agem && !replay.empty()) {
        nk::Tape ref_tape;
        const data::TrainBatch rb = data::make_train_batch(replay);
        const auto out = model.forward(ref_tape, rb.inputs, train_opts);
        ref_tape.backward(model::lm_loss(out.logits, rb.targets, rb.loss_mask));
        g_ref = flatten_grads(model.parameters());
        model.zero_grad();
    }

    nk::Tape tape;
    const data::TrainBatch batch = data::make_train_batch(plain);
    const auto out = model.forward(tape, batch.inputs, train_opts);
    std::vector<std::pair<nk::Var, double>> parts{
        {model::lm_loss(out.logits, batch.targets, batch.loss_mask), active_count(batch.loss_mask)}};

    if (config_.kind == StrategyKind::Replay && config_.augment == ReplayAugment::Dropout && !replay.empty()) {
        const data::TrainBatch rb = data::make_train_batch(replay);
        model::ForwardOptions o = train_opts;
        o.dropout = config_.augment_dropout;
        const auto again = model.forward(tape, rb.inputs, o);
        parts.emplace_back(model::lm_loss(again.logits, rb.targets, rb.loss_mask), active_count(rb.loss_mask));
    }

    std::optional<model::ForwardOutput> mixed;
    std::optional<augment::MixupBatch> mb;
    if (uses_mixup(config_.kind) && !replay.empty()) {
        mb = augment::build_mixup_batch(current, replay, {config_.alpha}, model.config().num_layers, mix_rng);
        const nk::Var partner = model.hidden_at(tape, mb->replay, mb->layer, train_opts);
        model::ForwardOptions o = train_opts;
        o.inject = model::MixInjection{mb->layer, mb->lambda, partner};
        o.pool_mask = &mb->pool_mask;
        mixed = model.forward(tape, mb->current, o);
        parts.emplace_back(model::lm_loss(mixed->logits, mb->targets, mb->loss_mask), active_count(mb->loss_mask));
    }

    const nk::Var l_theta = parts.size() == 1 ? parts.front().first : pooled_mean(parts);
    rec.l_theta = l_theta.value().item();
    rec.rows = plain.size() + (mb ? mb->specs.size() : 0);
    nk::Var loss = l_theta;

    if (config_.kind == StrategyKind::TMBNNM) {
        nk::Var z = bnnm_representation(out, config_.bnnm_level, batch.inputs.pad_mask);
        if (mixed)
            z = nk::concat_rows({z, bnnm_representation(*mixed, config_.bnnm_level, mb->pool_mask)});
        const nk::Var l_bnnm = bnnm_loss(z);
        rec.l_bnnm = l_bnnm.value().item();
        loss = total_loss(loss, l_bnnm, config_.kappa);
    }
    if (config_.kind == StrategyKind::EWC && anchor_) {
        const nk::Var l_ewc = ewc_penalty(tape, model.parameters(), *anchor_, config_.ewc_lambda);
        rec.l_ewc = l_ewc.value().item();
        loss = nk::add(loss, l_ewc);
    }

    tape.backward(loss);
    if (g_ref.size() > 0)
        assign_grads(model.parameters(), agem_project(flatten_grads(model.parameters()), g_ref));
    rec.grad_norm = clip_grad_norm(model.parameters(), config_.clip_norm);
    adamw_step(model.parameters(), optimizer_, config_.lr, AdamWConfig{.weight_decay = config_.weight_decay});

    if (options_.rank_every > 0 && rec.step % static_cast<std::size_t>(options_.rank_every) == 0) {
        nk::Tape probe(false);
        const data::TrainBatch pb = data::make_train_batch(plain);
        rec.rank = nk::numerical_rank(model.infer(probe, pb.inputs).pooled.value(), options_.rank_rel_tol);
    }
    return rec;
}

void ContinualTrainer::finish_domain(model::TransformerLM& model, const std::string& domain,
                                     const std::vector<data::Example>& examples) {
    if (uses_replay(config_.kind))
        replay_.store(domain, data::herding_select(examples, model, config_.memory));
    if (config_.kind == StrategyKind::EWC) {
        std::vector<const data::Example*> sample;
        for (const auto& ex : examples)
            sample.push_back(&ex);
        if (sample.size() > config_.fisher_samples) {
            Rng rng = make_stream(options_.seed, "fisher", domain_index_);
            std::vector<const data::Example*> picked;
            std::sample(sample.begin(), sample.end(), std::back_inserter(picked), config_.fisher_samples, rng);
            sample = std::move(picked);
        }
        FisherAnchor next = estimate_fisher(model, sample);
        if (anchor_)
            anchor_->accumulate(next);
        else
            anchor_ = std::move(next);
    }
}

} // namespace clgen::strategy
