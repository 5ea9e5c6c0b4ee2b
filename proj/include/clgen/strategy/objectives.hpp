#pragma once

#include "clgen/data/example.hpp"
#include "clgen/model/transformer.hpp"
#include "clgen/strategy/config.hpp"

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

namespace clgen::strategy {

using nk::Index;

/// -(1/B) * nuclear norm of the row-normalized [B, H] matrix z.
nk::Var bnnm_loss(const nk::Var& z);

/// Representation matrix for BNNM: the pooled sentence vectors, or the
/// real-token rows of the last hidden state.
nk::Var bnnm_representation(const model::ForwardOutput& out, BnnmLevel level, const nk::Mask& pad_mask);

/// L_theta + kappa * L_bnnm.
nk::Var total_loss(const nk::Var& l_theta, const nk::Var& l_bnnm, double kappa);

/// Parameter snapshot with a diagonal Fisher estimate per parameter.
struct FisherAnchor {
    std::vector<std::string> names;
    std::vector<nk::Tensor> theta;
    std::vector<nk::Tensor> fisher;

    /// Adds next's Fisher to this one and moves the snapshot to next's.
    void accumulate(const FisherAnchor& next);
};

/// (lambda / 2) * sum_k F_k (theta_k - theta*_k)^2 over `params`.
nk::Var ewc_penalty(nk::Tape& tape, std::vector<nk::Parameter>& params, const FisherAnchor& anchor, double lambda);

/// Empirical diagonal Fisher: the mean over samples of the squared
/// gradient of nll(tape, i). nll must record `params` on the tape.
FisherAnchor estimate_fisher(std::vector<nk::Parameter>& params, std::size_t samples,
                             const std::function<nk::Var(nk::Tape&, std::size_t)>& nll);

/// Fisher of the LM negative log-likelihood over `examples`.
FisherAnchor estimate_fisher(model::TransformerLM& model, const std::vector<const data::Example*>& examples);

/// Projects g so it does not oppose g_ref.
Eigen::VectorXd agem_project(const Eigen::VectorXd& g, const Eigen::VectorXd& g_ref);

Eigen::VectorXd flatten_grads(const std::vector<nk::Parameter>& params);
void assign_grads(std::vector<nk::Parameter>& params, const Eigen::VectorXd& flat);

} // namespace clgen::strategy
