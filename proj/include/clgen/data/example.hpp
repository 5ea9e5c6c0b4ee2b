#pragma once

#include "clgen/data/record.hpp"
#include "clgen/data/tokenizer.hpp"
#include "clgen/model/transformer.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace clgen::data {

using nk::Index;

struct FormatOptions {
    Mode mode = Mode::TaskOriented;
    int t_turns = 3;
    /// Budget for the full BOS X SEP Y EOS sequence.
    int max_len = 80;

    static FormatOptions defaults(Mode mode);
};

/// A tokenized training record. tokens = BOS X SEP Y EOS and loss_mask is 1
/// exactly at the Y and EOS positions.
struct Example {
    std::string domain;
    std::vector<int> input_tokens;
    std::vector<int> target_tokens;
    std::vector<int> tokens;
    nk::Mask loss_mask;
    std::string raw_input;
    std::string reference;
    SlotList raw_slots;

    /// BOS X SEP: the generation prefix.
    std::vector<int> prompt() const;
};

/// "INTENT ( s1 = v1 ; s2 = v2 )".
std::string linearize_act(const std::string& intent, const SlotList& slots);

/// Source text of a record (linearized act or the retained context turns).
std::string input_text(const RawRecord& record, const FormatOptions& opts);

/// Returns nullopt (with a warning) for an empty response.
std::optional<Example> format_example(const RawRecord& record, const Tokenizer& tok, const FormatOptions& opts);
std::vector<Example> format_all(const std::vector<RawRecord>& records, const Tokenizer& tok, const FormatOptions& opts);

/// Teacher-forcing batch: inputs are tokens[:-1], targets tokens[1:].
struct TrainBatch {
    model::TokenBatch inputs;
    std::vector<nk::SoftTarget> targets;
    nk::Mask loss_mask;
    std::vector<std::string> domains;

    Index size() const { return inputs.batch; }
};

TrainBatch make_train_batch(std::span<const Example* const> examples, Index length = 0);

} // namespace clgen::data
