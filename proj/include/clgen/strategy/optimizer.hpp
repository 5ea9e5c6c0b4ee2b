#pragma once

#include "clgen/numkernel/autodiff.hpp"

#include <cstdint>
#include <vector>

namespace clgen::strategy {

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

struct AdamWState {
    std::vector<nk::Tensor> m;
    std::vector<nk::Tensor> v;
    std::uint64_t step = 0;
};

/// One AdamW update with bias correction and decoupled weight decay.
void adamw_step(std::vector<nk::Parameter>& params, AdamWState& state, double lr, const AdamWConfig& config = {});

/// Rescales gradients to global L2 norm <= max_norm; returns the norm before.
double clip_grad_norm(std::vector<nk::Parameter>& params, double max_norm);

} // namespace clgen::strategy
