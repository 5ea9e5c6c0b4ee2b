#pragma once

#include "clgen/data/record.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace clgen::eval {

/// Lowercased whitespace tokens.
std::vector<std::string> words(const std::string& text);

/// Corpus BLEU in [0, 100] over lowercased whitespace tokens: geometric mean
/// of clipped 1..4-gram precisions times the brevity penalty, unsmoothed.
double bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references);

struct TerStats {
    std::size_t edits = 0;
    std::size_t ref_length = 0;
};

/// Edit count of one sentence pair: Levenshtein edits plus greedy block
/// shifts, following the tercom search heuristics.
TerStats ter_sentence(const std::vector<std::string>& hyp, const std::vector<std::string>& ref);

/// Corpus TER: total edits over total reference length.
double ter(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references);

/// Unique over total n-grams across the whole corpus.
double distinct_ngrams(const std::vector<std::string>& corpus, int n);

/// Fraction of slot values missing from the utterance (case-insensitive
/// substring match after whitespace normalization).
double slot_error_rate(const std::string& utterance, const data::SlotList& slots);

/// Index of the candidate with the lowest slot error rate; ties go to the
/// earliest candidate.
std::size_t select_best_of_k(const std::vector<std::string>& candidates, const data::SlotList& slots);

} // namespace clgen::eval
