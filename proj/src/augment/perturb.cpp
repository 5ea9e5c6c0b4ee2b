#include "clgen/augment/perturb.hpp"

#include "clgen/common/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace clgen::augment {

PerturbKind parse_perturb_kind(const std::string& name) {
    if (name == "delete")
        return PerturbKind::Delete;
    if (name == "insert")
        return PerturbKind::Insert;
    if (name == "swap")
        return PerturbKind::Swap;
    if (name == "substitute")
        return PerturbKind::Substitute;
    throw InputError("unknown perturbation kind: " + name);
}

std::string to_string(PerturbKind kind) {
    switch (kind) {
    case PerturbKind::Delete: return "delete";
    case PerturbKind::Insert: return "insert";
    case PerturbKind::Swap: return "swap";
    case PerturbKind::Substitute: return "substitute";
    }
    return "?";
}

namespace {

std::vector<std::size_t> distinct_positions(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(k);
    std::sort(all.begin(), all.end());
    return all;
}

} // namespace

std::string discrete_perturb(const std::string& text, PerturbKind kind, double fraction, Rng& rng,
                             const std::vector<std::string>& vocabulary) {
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw InputError("perturb: fraction must lie in [0, 1]");
    std::vector<std::string> words;
    std::istringstream is(text);
    for (std::string w; is >> w;)
        words.push_back(w);
    const std::size_t n = words.size();
    std::size_t k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    if (k == 0 || n == 0)
        return text;

    switch (kind) {
    case PerturbKind::Delete: {
        if (n == 1) {
            spdlog::warn("perturb: cannot delete from a single-word text");
            return text;
        }
        k = std::min(k, n - 1);
        const auto drop = distinct_positions(n, k, rng);
        std::vector<std::string> kept;
        for (std::size_t i = 0; i < n; ++i)
            if (!std::binary_search(drop.begin(), drop.end(), i))
                kept.push_back(words[i]);
        words = std::move(kept);
        break;
    }
    case PerturbKind::Insert: {
        for (std::size_t r = 0; r < k; ++r) {
            std::uniform_int_distribution<std::size_t> src(0, words.size() - 1), dst(0, words.size());
            const std::string w = words[src(rng)];
            words.insert(words.begin() + static_cast<std::ptrdiff_t>(dst(rng)), w);
        }
        break;
    }
    case PerturbKind::Swap: {
        if (n < 2)
            return text;
        for (std::size_t i : distinct_positions(n - 1, std::min(k, n - 1), rng))
            std::swap(words[i], words[i + 1]);
        break;
    }
    case PerturbKind::Substitute: {
        if (vocabulary.empty())
            throw InputError("perturb: substitution needs a vocabulary");
        std::uniform_int_distribution<std::size_t> pick(0, vocabulary.size() - 1);
        for (std::size_t i : distinct_positions(n, k, rng)) {
            std::string w = vocabulary[pick(rng)];
            for (int tries = 0; w == words[i] && vocabulary.size() > 1 && tries < 16; ++tries)
                w = vocabulary[pick(rng)];
            words[i] = w;
        }
        break;
    }
    }
    std::string out;
    for (const auto& w : words) {
        if (!out.empty())
            out.push_back(' ');
        out += w;
    }
    return out;
}

data::Example perturb_example(const data::Example& ex, PerturbKind kind, double fraction,
                              const data::Tokenizer& tok, const data::FormatOptions& opts, Rng& rng) {
    const std::string text = discrete_perturb(tok.decode(ex.target_tokens, false), kind, fraction, rng, tok.words());
    std::vector<int> target = tok.encode(text);
    const std::size_t budget = static_cast<std::size_t>(opts.max_len) - 3 - ex.input_tokens.size();
    if (target.size() > budget)
        target.resize(budget);
    if (target.empty())
        return ex;
    data::Example out = ex;
    out.target_tokens = target;
    out.tokens.resize(ex.input_tokens.size() + 2);
    out.tokens.insert(out.tokens.end(), target.begin(), target.end());
    out.tokens.push_back(data::Tokenizer::kEos);
    out.loss_mask.assign(out.tokens.size(), 0);
    std::fill(out.loss_mask.begin() + static_cast<std::ptrdiff_t>(ex.input_tokens.size() + 2), out.loss_mask.end(), 1);
    return out;
}

std::pair<nk::Var, nk::Var> dropout_twice(nk::Tape& tape, model::TransformerLM& model,
                                          const data::TrainBatch& batch, double rate, Rng& rng) {
    model::ForwardOptions o;
    o.training = true;
    o.dropout = rate;
    o.rng = &rng;
    const auto first = model.forward(tape, batch.inputs, o);
    const auto second = model.forward(tape, batch.inputs, o);
    return {model::lm_loss(first.logits, batch.targets, batch.loss_mask),
            model::lm_loss(second.logits, batch.targets, batch.loss_mask)};
}

} // namespace clgen::augment
