#include "clgen/eval/evaluate.hpp"

#include "clgen/common/error.hpp"
#include "clgen/eval/metrics.hpp"
#include "clgen/model/generate.hpp"

#include <spdlog/spdlog.h>

namespace clgen::eval {

GenerationConfig GenerationConfig::defaults(data::Mode mode) {
    GenerationConfig c;
    c.candidates = mode == data::Mode::TaskOriented ? 5 : 1;
    return c;
}

void GenerationConfig::validate() const {
    if (!(top_p > 0.0 && top_p <= 1.0))
        throw InputError("generation: top_p must lie in (0, 1]");
    if (candidates < 1)
        throw InputError("generation: candidates must be >= 1");
    if (max_new_tokens < 1)
        throw InputError("generation: max_new_tokens must be >= 1");
    if (batch_size < 1)
        throw InputError("generation: batch_size must be >= 1");
}

MetricReport evaluate_curriculum(const model::TransformerLM& model,
                                 const std::map<std::string, std::vector<data::Example>>& tests,
                                 const std::vector<std::string>& order, const data::Tokenizer& tokenizer,
                                 const GenerationConfig& config, std::uint64_t seed, Hypotheses* hypotheses) {
    config.validate();
    const auto k = static_cast<std::size_t>(config.candidates);
    model::SamplingOptions sampling;
    sampling.top_p = config.top_p;
    sampling.max_new_tokens = config.max_new_tokens;
    sampling.eos_id = data::Tokenizer::kEos;
    sampling.pad_id = data::Tokenizer::kPad;

    MetricReport report;
    for (const auto& [domain, examples] : tests) {
        if (examples.empty())
            throw InputError("evaluate: domain '" + domain + "' has no test data");
        // One stream per (example, candidate) keeps decoding independent of batching.
        std::vector<std::vector<int>> prefixes;
        std::vector<Rng> rngs;
        for (std::size_t i = 0; i < examples.size(); ++i)
            for (std::size_t j = 0; j < k; ++j) {
                prefixes.push_back(examples[i].prompt());
                rngs.push_back(make_stream(seed, "generate." + domain, i * k + j));
            }
        std::vector<std::string> decoded;
        for (std::size_t start = 0; start < prefixes.size(); start += config.batch_size) {
            const std::size_t end = std::min(prefixes.size(), start + config.batch_size);
            const std::vector<std::vector<int>> chunk(prefixes.begin() + static_cast<std::ptrdiff_t>(start),
                                                      prefixes.begin() + static_cast<std::ptrdiff_t>(end));
            const auto out = model::generate_nucleus_batch(
                model, chunk, sampling, std::span<Rng>(rngs.data() + start, end - start));
            for (const auto& ids : out)
                decoded.push_back(tokenizer.decode(ids));
        }

        std::vector<std::string> hyps, refs;
        double err = 0.0;
        for (std::size_t i = 0; i < examples.size(); ++i) {
            data::SlotList slots;
            for (const auto& [name, value] : examples[i].raw_slots)
                slots.emplace_back(name, data::Tokenizer::normalize(value));
            const std::vector<std::string> cands(decoded.begin() + static_cast<std::ptrdiff_t>(i * k),
                                                 decoded.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
            const std::size_t best = select_best_of_k(cands, slots);
            hyps.push_back(cands[best]);
            refs.push_back(examples[i].reference);
            err += slot_error_rate(cands[best], slots);
        }

        DomainMetrics m;
        m.domain = domain;
        m.samples = examples.size();
        m.bleu = bleu(hyps, refs);
        m.ter = ter(hyps, refs);
        for (int n = 1; n <= 4; ++n)
            m.distinct[static_cast<std::size_t>(n - 1)] = distinct_ngrams(hyps, n);
        m.err = err / static_cast<double>(examples.size());
        report.domains.push_back(m);
        spdlog::debug("evaluate {}: BLEU {:.2f}", domain, m.bleu);
        if (hypotheses)
            (*hypotheses)[domain] = std::move(hyps);
    }
    for (std::size_t p = 0; p < order.size(); ++p)
        report.by_position.push_back({p, order[p], report.domain(order[p]).bleu});
    report.finalize();
    report.validate();
    return report;
}

} // namespace clgen::eval
