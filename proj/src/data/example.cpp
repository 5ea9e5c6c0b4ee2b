#include "clgen/data/example.hpp"

#include "clgen/common/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

namespace clgen::data {

FormatOptions FormatOptions::defaults(Mode mode) {
    FormatOptions o;
    o.mode = mode;
    o.max_len = mode == Mode::TaskOriented ? 80 : 100;
    return o;
}

std::vector<int> Example::prompt() const {
    return {tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(input_tokens.size() + 2)};
}

std::string linearize_act(const std::string& intent, const SlotList& slots) {
    std::string out = intent + " (";
    for (std::size_t i = 0; i < slots.size(); ++i) {
        out += (i ? " ; " : " ") + slots[i].first + " = " + slots[i].second;
    }
    return out + " )";
}

std::string input_text(const RawRecord& record, const FormatOptions& opts) {
    if (opts.mode == Mode::TaskOriented)
        return linearize_act(record.intent, record.slots);
    if (opts.t_turns < 1)
        throw InputError("format: t_turns must be >= 1");
    const std::size_t n = record.context.size();
    const std::size_t keep = std::min(n, static_cast<std::size_t>(opts.t_turns));
    std::string out;
    for (std::size_t i = n - keep; i < n; ++i) {
        // The most recent turn belongs to speaker 1; speakers alternate backwards.
        const bool first_speaker = (n - 1 - i) % 2 == 0;
        if (!out.empty())
            out.push_back(' ');
        out += first_speaker ? "<spk1> " : "<spk2> ";
        out += record.context[i];
    }
    return out;
}

std::optional<Example> format_example(const RawRecord& record, const Tokenizer& tok, const FormatOptions& opts) {
    if (opts.max_len < 5)
        throw InputError("format: max_len must be >= 5");
    std::vector<int> y = tok.encode(record.response);
    if (y.empty()) {
        spdlog::warn("{} line {}: empty response, record skipped", record.domain, record.line);
        return std::nullopt;
    }
    Example ex;
    ex.domain = record.domain;
    ex.raw_input = input_text(record, opts);
    ex.reference = Tokenizer::normalize(record.response);
    ex.raw_slots = record.slots;
    std::vector<int> x = tok.encode(ex.raw_input);

    const std::size_t budget = static_cast<std::size_t>(opts.max_len) - 3;
    if (x.size() + y.size() > budget) {
        const std::size_t y_floor = std::min(y.size(), budget / 2);
        if (x.size() > budget - y_floor) {
            const std::size_t keep = budget - y_floor;
            // Context keeps its most recent words; a dialog act keeps its head.
            if (opts.mode == Mode::Chitchat)
                x.erase(x.begin(), x.end() - static_cast<std::ptrdiff_t>(keep));
            else
                x.resize(keep);
        }
        y.resize(std::min(y.size(), budget - x.size()));
    }

    ex.input_tokens = x;
    ex.target_tokens = y;
    ex.tokens.push_back(Tokenizer::kBos);
    ex.tokens.insert(ex.tokens.end(), x.begin(), x.end());
    ex.tokens.push_back(Tokenizer::kSep);
    ex.tokens.insert(ex.tokens.end(), y.begin(), y.end());
    ex.tokens.push_back(Tokenizer::kEos);
    ex.loss_mask.assign(ex.tokens.size(), 0);
    std::fill(ex.loss_mask.begin() + static_cast<std::ptrdiff_t>(x.size() + 2), ex.loss_mask.end(), 1);
    return ex;
}

std::vector<Example> format_all(const std::vector<RawRecord>& records, const Tokenizer& tok,
                                const FormatOptions& opts) {
    std::vector<Example> out;
    out.reserve(records.size());
    for (const auto& r : records)
        if (auto ex = format_example(r, tok, opts))
            out.push_back(std::move(*ex));
    return out;
}

TrainBatch make_train_batch(std::span<const Example* const> examples, Index length) {
    if (examples.empty())
        throw InputError("train batch: no examples");
    Index longest = 0;
    for (const Example* e : examples)
        longest = std::max(longest, static_cast<Index>(e->tokens.size()) - 1);
    if (length == 0)
        length = longest;
    if (longest > length)
        throw InputError("train batch: example longer than requested length");

    TrainBatch b;
    std::vector<std::vector<int>> inputs;
    for (const Example* e : examples) {
        inputs.emplace_back(e->tokens.begin(), e->tokens.end() - 1);
        b.domains.push_back(e->domain);
    }
    b.inputs = model::TokenBatch::from_sequences(inputs, Tokenizer::kPad, length);
    b.targets.assign(static_cast<std::size_t>(b.inputs.batch * length), nk::SoftTarget::one_hot(Tokenizer::kPad));
    b.loss_mask.assign(b.targets.size(), 0);
    for (std::size_t r = 0; r < examples.size(); ++r) {
        const Example& e = *examples[r];
        for (std::size_t t = 0; t + 1 < e.tokens.size(); ++t) {
            const std::size_t at = r * static_cast<std::size_t>(length) + t;
            b.targets[at] = nk::SoftTarget::one_hot(e.tokens[t + 1]);
            b.loss_mask[at] = e.loss_mask[t + 1];
        }
    }
    return b;
}

} // namespace clgen::data
