#pragma once

#include "clgen/data/example.hpp"
#include "clgen/model/transformer.hpp"

#include <map>
#include <string>
#include <vector>

namespace clgen::data {

/// Per-domain exemplar store. Exemplars are immutable once stored.
class ReplayMemory {
public:
    explicit ReplayMemory(std::size_t capacity = 5);

    std::size_t capacity() const noexcept { return capacity_; }
    void store(const std::string& domain, std::vector<Example> exemplars);

    bool empty() const noexcept { return order_.empty(); }
    std::size_t size() const;
    const std::vector<std::string>& domains() const noexcept { return order_; }
    const std::vector<Example>& domain(const std::string& name) const;

    /// Every stored exemplar in storage order. Each call counts as a read.
    std::vector<const Example*> exemplars() const;
    std::size_t reads() const noexcept { return reads_; }

private:
    std::size_t capacity_;
    std::vector<std::string> order_;
    std::map<std::string, std::vector<Example>> store_;
    mutable std::size_t reads_ = 0;
};

/// Greedy herding: repeatedly picks the unchosen row that keeps the mean of
/// the chosen rows closest to the mean of all rows. Ties go to the lower
/// index. Returns min(m, rows) indices in selection order.
std::vector<std::size_t> herding_select(const nk::RowMatrix& features, std::size_t m);

/// Sentence-pool features of full sequences, one row per example.
nk::RowMatrix pooled_features(const model::TransformerLM& model, const std::vector<Example>& examples,
                              std::size_t batch_size = 32);

/// Herding over the pooled features of `corpus` under `model`.
std::vector<Example> herding_select(const std::vector<Example>& corpus, const model::TransformerLM& model,
                                    std::size_t m);

} // namespace clgen::data
