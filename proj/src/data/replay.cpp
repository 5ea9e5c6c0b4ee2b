#include "clgen/data/replay.hpp"

#include "clgen/common/error.hpp"

#include <limits>

namespace clgen::data {

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0)
        throw InputError("replay memory: capacity must be >= 1");
}

void ReplayMemory::store(const std::string& domain, std::vector<Example> exemplars) {
    if (store_.count(domain))
        throw Error("replay memory: domain already stored: " + domain);
    if (exemplars.size() > capacity_)
        throw Error("replay memory: too many exemplars for " + domain);
    order_.push_back(domain);
    store_.emplace(domain, std::move(exemplars));
}

std::size_t ReplayMemory::size() const {
    std::size_t n = 0;
    for (const auto& [_, v] : store_)
        n += v.size();
    return n;
}

const std::vector<Example>& ReplayMemory::domain(const std::string& name) const {
    const auto it = store_.find(name);
    if (it == store_.end())
        throw InputError("replay memory: unknown domain " + name);
    return it->second;
}

std::vector<const Example*> ReplayMemory::exemplars() const {
    ++reads_;
    std::vector<const Example*> out;
    for (const auto& d : order_)
        for (const auto& e : store_.at(d))
            out.push_back(&e);
    return out;
}

std::vector<std::size_t> herding_select(const nk::RowMatrix& features, std::size_t m) {
    const auto n = static_cast<std::size_t>(features.rows());
    const Eigen::RowVectorXd mu = features.colwise().mean();
    Eigen::RowVectorXd chosen_sum = Eigen::RowVectorXd::Zero(features.cols());
    std::vector<bool> used(n, false);
    std::vector<std::size_t> picked;
    while (picked.size() < std::min(m, n)) {
        const double k = static_cast<double>(picked.size() + 1);
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_i = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (used[i])
                continue;
            const double d = (mu - (chosen_sum + features.row(static_cast<Index>(i))) / k).norm();
            if (d < best) {
                best = d;
                best_i = i;
            }
        }
        used[best_i] = true;
        picked.push_back(best_i);
        chosen_sum += features.row(static_cast<Index>(best_i));
    }
    return picked;
}

nk::RowMatrix pooled_features(const model::TransformerLM& model, const std::vector<Example>& examples,
                              std::size_t batch_size) {
    nk::RowMatrix out(static_cast<Index>(examples.size()), model.config().hidden);
    for (std::size_t start = 0; start < examples.size(); start += batch_size) {
        const std::size_t end = std::min(examples.size(), start + batch_size);
        std::vector<std::vector<int>> seqs;
        for (std::size_t i = start; i < end; ++i)
            seqs.push_back(examples[i].tokens);
        nk::Tape tape(false);
        const auto fwd = model.infer(tape, model::TokenBatch::from_sequences(seqs, Tokenizer::kPad));
        out.middleRows(static_cast<Index>(start), static_cast<Index>(end - start)) = fwd.pooled.value().matrix();
    }
    return out;
}

std::vector<Example> herding_select(const std::vector<Example>& corpus, const model::TransformerLM& model,
                                    std::size_t m) {
    if (corpus.empty())
        throw InputError("herding: empty corpus");
    std::vector<Example> out;
    for (std::size_t i : herding_select(pooled_features(model, corpus), m))
        out.push_back(corpus[i]);
    return out;
}

} // namespace clgen::data
