#pragma once

#include "clgen/data/example.hpp"
#include "clgen/data/fixtures.hpp"
#include "clgen/eval/evaluate.hpp"
#include "clgen/model/transformer.hpp"
#include "clgen/strategy/config.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace clgen::cli {

enum class VocabScope { FirstDomain, AllDomains };

VocabScope parse_vocab_scope(const std::string& name);
std::string to_string(VocabScope scope);

/// Experiment description loaded from an INI file. Relative paths resolve
/// against the directory of the config file.
struct RunConfig {
    std::filesystem::path source;
    std::filesystem::path output;
    data::Mode mode = data::Mode::TaskOriented;

    /// Either a directory with train.jsonl and test.jsonl, or generated fixtures.
    std::filesystem::path data_dir;
    bool fixtures = false;
    data::FixtureOptions fixture;

    std::vector<std::uint64_t> seeds{1};
    int permutations = 5;
    VocabScope vocab_scope = VocabScope::FirstDomain;
    int min_count = 2;
    data::FormatOptions format;

    model::ModelConfig model;
    eval::GenerationConfig generation;
    int rank_every = 0;
    double rank_rel_tol = 1e-2;

    std::vector<strategy::StrategyConfig> strategies;

    static RunConfig load(const std::filesystem::path& path);
    static RunConfig parse(const std::string& text, const std::filesystem::path& source);
    void validate() const;
};

} // namespace clgen::cli
