#include "clgen/strategy/objectives.hpp"

#include "clgen/common/error.hpp"

namespace clgen::strategy {

nk::Var bnnm_loss(const nk::Var& z) {
    const Index rows = z.value().rows();
    if (rows == 0 || z.value().empty())
        throw InputError("bnnm_loss: empty batch");
    return nk::scale(nk::nuclear_norm(nk::row_l2_normalize(z)), -1.0 / static_cast<double>(rows));
}

nk::Var bnnm_representation(const model::ForwardOutput& out, BnnmLevel level, const nk::Mask& pad_mask) {
    if (level == BnnmLevel::Sentence)
        return out.pooled;
    return model::token_matrix(out.hiddens.back(), pad_mask);
}

nk::Var total_loss(const nk::Var& l_theta, const nk::Var& l_bnnm, double kappa) {
    if (kappa == 0.0 || !l_bnnm.valid())
        return l_theta;
    return nk::axpby(1.0, l_theta, kappa, l_bnnm);
}

void FisherAnchor::accumulate(const FisherAnchor& next) {
    if (names.empty()) {
        *this = next;
        return;
    }
    if (names != next.names)
        throw InputError("FisherAnchor: parameter sets differ");
    for (std::size_t k = 0; k < fisher.size(); ++k) {
        if (fisher[k].shape() != next.fisher[k].shape())
            throw InputError("FisherAnchor: shape mismatch for " + names[k]);
        fisher[k].flat() += next.fisher[k].flat();
    }
    theta = next.theta;
}

nk::Var ewc_penalty(nk::Tape& tape, std::vector<nk::Parameter>& params, const FisherAnchor& anchor, double lambda) {
    if (anchor.theta.size() != params.size() || anchor.fisher.size() != params.size())
        throw InputError("ewc_penalty: anchor does not match the parameters");
    std::vector<nk::Var> terms;
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (params[k].value().shape() != anchor.theta[k].shape() ||
            params[k].value().shape() != anchor.fisher[k].shape())
            throw InputError("ewc_penalty: shape mismatch for " + params[k].name());
        terms.push_back(nk::weighted_squared_distance(tape.parameter(params[k]), anchor.theta[k], anchor.fisher[k]));
    }
    nk::Var total = terms.front();
    for (std::size_t k = 1; k < terms.size(); ++k)
        total = nk::add(total, terms[k]);
    return nk::scale(total, lambda / 2.0);
}

FisherAnchor estimate_fisher(std::vector<nk::Parameter>& params, std::size_t samples,
                             const std::function<nk::Var(nk::Tape&, std::size_t)>& nll) {
    if (samples == 0)
        throw InputError("estimate_fisher: empty sample");
    FisherAnchor anchor;
    for (const auto& p : params) {
        anchor.names.push_back(p.name());
        anchor.theta.push_back(p.value());
        anchor.fisher.push_back(nk::Tensor::zeros_like(p.value()));
    }
    for (std::size_t i = 0; i < samples; ++i) {
        for (auto& p : params)
            p.zero_grad();
        nk::Tape tape;
        tape.backward(nll(tape, i));
        for (std::size_t k = 0; k < params.size(); ++k)
            anchor.fisher[k].flat() += params[k].grad().flat().cwiseAbs2();
    }
    for (auto& f : anchor.fisher)
        f.flat() /= static_cast<double>(samples);
    for (auto& p : params)
        p.zero_grad();
    return anchor;
}

FisherAnchor estimate_fisher(model::TransformerLM& model, const std::vector<const data::Example*>& examples) {
    return estimate_fisher(model.parameters(), examples.size(), [&](nk::Tape& tape, std::size_t i) {
        const data::Example* one[] = {examples[i]};
        const data::TrainBatch batch = data::make_train_batch(one);
        const auto out = model.forward(tape, batch.inputs);
        return model::lm_loss(out.logits, batch.targets, batch.loss_mask);
    });
}

Eigen::VectorXd agem_project(const Eigen::VectorXd& g, const Eigen::VectorXd& g_ref) {
    if (g.size() != g_ref.size())
        throw InputError("agem_project: length mismatch");
    const double ref_sq = g_ref.squaredNorm();
    if (std::sqrt(ref_sq) < 1e-12)
        return g;
    const double dot = g.dot(g_ref);
    if (dot >= 0.0)
        return g;
    return g - (dot / ref_sq) * g_ref;
}

Eigen::VectorXd flatten_grads(const std::vector<nk::Parameter>& params) {
    Index total = 0;
    for (const auto& p : params)
        total += p.grad().size();
    Eigen::VectorXd flat(total);
    Index at = 0;
    for (const auto& p : params) {
        flat.segment(at, p.grad().size()) = p.grad().flat();
        at += p.grad().size();
    }
    return flat;
}

void assign_grads(std::vector<nk::Parameter>& params, const Eigen::VectorXd& flat) {
    Index at = 0;
    for (auto& p : params) {
        if (at + p.grad().size() > flat.size())
            throw InputError("assign_grads: vector too short");
        p.grad().flat() = flat.segment(at, p.grad().size());
        at += p.grad().size();
    }
    if (at != flat.size())
        throw InputError("assign_grads: vector too long");
}

} // namespace clgen::strategy
