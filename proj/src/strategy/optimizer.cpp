#include "clgen/strategy/optimizer.hpp"

#include "clgen/common/error.hpp"

#include <cmath>

namespace clgen::strategy {

void adamw_step(std::vector<nk::Parameter>& params, AdamWState& state, double lr, const AdamWConfig& config) {
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.push_back(nk::Tensor::zeros_like(p.value()));
            state.v.push_back(nk::Tensor::zeros_like(p.value()));
        }
    }
    if (state.m.size() != params.size())
        throw InputError("adamw_step: optimizer state does not match the parameters");
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto theta = params[k].value().flat();
        const auto g = params[k].grad().flat();
        auto m = state.m[k].flat();
        auto v = state.v[k].flat();
        if (m.size() != theta.size())
            throw InputError("adamw_step: moment shape mismatch for " + params[k].name());
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            theta[i] -= lr * config.weight_decay * theta[i];
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
            theta[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config.eps);
        }
    }
}

double clip_grad_norm(std::vector<nk::Parameter>& params, double max_norm) {
    double sq = 0.0;
    for (const auto& p : params)
        sq += p.grad().flat().squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double s = max_norm / norm;
        for (auto& p : params)
            p.grad().flat() *= s;
    }
    return norm;
}

} // namespace clgen::strategy
