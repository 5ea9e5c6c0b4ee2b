#pragma once

#include "clgen/data/example.hpp"
#include "clgen/eval/report.hpp"
#include "clgen/model/transformer.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace clgen::eval {

struct GenerationConfig {
    double top_p = 0.9;
    int candidates = 5;
    int max_new_tokens = 40;
    /// Sequences decoded together; does not change the results.
    std::size_t batch_size = 64;

    static GenerationConfig defaults(data::Mode mode);
    void validate() const;
};

/// Decoded hypotheses per domain, in test-set order.
using Hypotheses = std::map<std::string, std::vector<std::string>>;

/// Generates k candidates per test prompt, keeps the one with the lowest
/// slot error rate and scores every domain. `order` is the curriculum used
/// for the by-position series.
MetricReport evaluate_curriculum(const model::TransformerLM& model,
                                 const std::map<std::string, std::vector<data::Example>>& tests,
                                 const std::vector<std::string>& order, const data::Tokenizer& tokenizer,
                                 const GenerationConfig& config, std::uint64_t seed, Hypotheses* hypotheses = nullptr);

} // namespace clgen::eval
