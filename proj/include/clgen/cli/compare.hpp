#pragma once

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace clgen::cli {

/// Side-by-side macro metrics of several results directories, joined on
/// strategy name. Strategies missing from a directory leave gaps.
struct Comparison {
    struct Metric {
        std::string name;
        bool higher_is_better = true;
    };

    std::vector<std::string> sources;
    std::vector<std::string> strategies;
    std::vector<Metric> metrics;
    /// values[strategy][source][metric]
    std::vector<std::vector<std::vector<std::optional<double>>>> values;

    /// True where the value is the best of its metric within its source.
    bool is_best(std::size_t strategy, std::size_t source, std::size_t metric) const;

    nlohmann::ordered_json to_json() const;
    std::string to_text() const;
};

const std::vector<Comparison::Metric>& comparison_metrics();

/// Reads <dir>/results.json from every directory.
Comparison compare_results(const std::vector<std::filesystem::path>& dirs);

} // namespace clgen::cli
