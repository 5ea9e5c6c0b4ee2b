#include "clgen/model/generate.hpp"

#include "clgen/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace clgen::model {

int sample_nucleus(std::span<const double> logits, double top_p, Rng& rng) {
    if (!(top_p > 0.0 && top_p <= 1.0))
        throw InputError("nucleus sampling: top_p must lie in (0, 1]");
    if (logits.empty())
        throw InputError("nucleus sampling: empty distribution");
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> probs(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i)
        total += probs[i] = std::exp(logits[i] - peak);
    for (double& p : probs)
        p /= total;

    std::vector<int> order(logits.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return probs[a] > probs[b]; });

    std::size_t keep = 0;
    double mass = 0.0;
    while (keep < order.size()) {
        mass += probs[order[keep++]];
        if (mass >= top_p)
            break;
    }
    std::uniform_real_distribution<double> u(0.0, mass);
    const double r = u(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < keep; ++i) {
        acc += probs[order[i]];
        if (r < acc)
            return order[i];
    }
    return order[keep - 1];
}

std::vector<std::vector<int>> generate_nucleus_batch(const TransformerLM& model,
                                                     const std::vector<std::vector<int>>& prefixes,
                                                     const SamplingOptions& opts, std::span<Rng> rngs) {
    if (rngs.size() != prefixes.size())
        throw InputError("generate: one random stream per prefix required");
    const Index max_len = model.config().max_seq_len;
    std::vector<std::vector<int>> seqs = prefixes;
    std::vector<std::vector<int>> out(prefixes.size());
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        if (seqs[i].empty())
            throw InputError("generate: empty prefix");
        if (static_cast<Index>(seqs[i].size()) < max_len && opts.max_new_tokens > 0)
            active.push_back(i);
    }
    while (!active.empty()) {
        std::vector<std::vector<int>> rows;
        std::vector<Index> positions;
        for (std::size_t i : active) {
            rows.push_back(seqs[i]);
            positions.push_back(static_cast<Index>(seqs[i].size()) - 1);
        }
        const nk::RowMatrix logits =
            model.next_logits(TokenBatch::from_sequences(rows, opts.pad_id), positions);
        std::vector<std::size_t> still;
        for (std::size_t r = 0; r < active.size(); ++r) {
            const std::size_t i = active[r];
            const int tok = sample_nucleus(std::span<const double>(logits.row(static_cast<Index>(r)).data(),
                                                                   static_cast<std::size_t>(logits.cols())),
                                           opts.top_p, rngs[i]);
            if (tok == opts.eos_id)
                continue;
            out[i].push_back(tok);
            seqs[i].push_back(tok);
            if (static_cast<int>(out[i].size()) < opts.max_new_tokens && static_cast<Index>(seqs[i].size()) < max_len)
                still.push_back(i);
        }
        active = std::move(still);
    }
    return out;
}

std::vector<int> generate_nucleus(const TransformerLM& model, std::span<const int> prefix,
                                  const SamplingOptions& opts, Rng& rng) {
    std::vector<std::vector<int>> prefixes{std::vector<int>(prefix.begin(), prefix.end())};
    return generate_nucleus_batch(model, prefixes, opts, std::span<Rng>(&rng, 1)).front();
}

} // namespace clgen::model
