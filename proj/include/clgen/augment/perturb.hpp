#pragma once

#include "clgen/common/rng.hpp"
#include "clgen/data/example.hpp"
#include "clgen/model/transformer.hpp"

#include <string>
#include <utility>
#include <vector>

namespace clgen::augment {

enum class PerturbKind { Delete, Insert, Swap, Substitute };

PerturbKind parse_perturb_kind(const std::string& name);
std::string to_string(PerturbKind kind);

/// Perturbs ceil(fraction * words) positions of a whitespace-separated text.
/// Substitutions draw from `vocabulary`.
std::string discrete_perturb(const std::string& text, PerturbKind kind, double fraction, Rng& rng,
                             const std::vector<std::string>& vocabulary = {});

/// Copy of `ex` with its response perturbed and re-tokenized.
data::Example perturb_example(const data::Example& ex, PerturbKind kind, double fraction,
                              const data::Tokenizer& tok, const data::FormatOptions& opts, Rng& rng);

/// Two training-mode passes over the same batch with independent dropout
/// masks; returns both LM losses.
std::pair<nk::Var, nk::Var> dropout_twice(nk::Tape& tape, model::TransformerLM& model,
                                          const data::TrainBatch& batch, double rate, Rng& rng);

} // namespace clgen::augment
