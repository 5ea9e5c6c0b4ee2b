#include "clgen/cli/compare.hpp"

#include "clgen/common/error.hpp"

#include <fmt/format.h>

#include <fstream>

namespace clgen::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

/// Looks up a macro metric; "distinct_4" reads macro.distinct[3].
std::optional<double> metric_value(const json& macro, const std::string& name) {
    std::string key = name;
    std::optional<std::size_t> index;
    if (name.rfind("distinct_", 0) == 0) {
        key = "distinct";
        index = static_cast<std::size_t>(name.back() - '1');
    }
    const auto it = macro.find(key);
    if (it == macro.end() || it->is_null())
        return std::nullopt;
    if (index) {
        if (!it->is_array() || *index >= it->size() || !(*it)[*index].is_number())
            return std::nullopt;
        return (*it)[*index].get<double>();
    }
    if (!it->is_number())
        return std::nullopt;
    return it->get<double>();
}

} // namespace

const std::vector<Comparison::Metric>& comparison_metrics() {
    static const std::vector<Comparison::Metric> metrics{
        {"bleu", true},       {"ter", false},        {"distinct_1", true}, {"distinct_2", true},
        {"distinct_3", true}, {"distinct_4", true},  {"err", false},
    };
    return metrics;
}

Comparison compare_results(const std::vector<fs::path>& dirs) {
    if (dirs.empty())
        throw InputError("compare needs at least one results directory");
    Comparison c;
    c.metrics = comparison_metrics();
    std::vector<json> aggregates;
    for (const auto& dir : dirs) {
        const fs::path path = dir / "results.json";
        std::ifstream in(path);
        if (!in)
            throw InputError("cannot open " + path.string());
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw InputError(path.string() + ": " + e.what());
        }
        c.sources.push_back(dir.string());
        const auto agg = j.find("aggregate");
        aggregates.push_back(agg != j.end() && agg->is_object() ? *agg : json::object());
        for (const auto& [name, _] : aggregates.back().items())
            if (std::find(c.strategies.begin(), c.strategies.end(), name) == c.strategies.end())
                c.strategies.push_back(name);
    }
    for (const auto& s : c.strategies) {
        auto& per_source = c.values.emplace_back();
        for (const auto& agg : aggregates) {
            auto& row = per_source.emplace_back(c.metrics.size());
            const auto it = agg.find(s);
            if (it == agg.end() || !it->contains("macro"))
                continue;
            for (std::size_t m = 0; m < c.metrics.size(); ++m)
                row[m] = metric_value((*it)["macro"], c.metrics[m].name);
        }
    }
    return c;
}

bool Comparison::is_best(std::size_t strategy, std::size_t source, std::size_t metric) const {
    const auto& v = values[strategy][source][metric];
    if (!v)
        return false;
    for (std::size_t s = 0; s < strategies.size(); ++s) {
        const auto& other = values[s][source][metric];
        if (other && (metrics[metric].higher_is_better ? *other > *v : *other < *v))
            return false;
    }
    return true;
}

json Comparison::to_json() const {
    json j;
    j["sources"] = sources;
    j["rows"] = json::array();
    for (std::size_t s = 0; s < strategies.size(); ++s) {
        json row;
        row["strategy"] = strategies[s];
        row["columns"] = json::array();
        for (std::size_t src = 0; src < sources.size(); ++src) {
            json group;
            group["source"] = sources[src];
            for (std::size_t m = 0; m < metrics.size(); ++m) {
                const auto& v = values[s][src][m];
                group[metrics[m].name] = {{"value", v ? json(*v) : json(nullptr)}, {"best", is_best(s, src, m)}};
            }
            row["columns"].push_back(std::move(group));
        }
        j["rows"].push_back(std::move(row));
    }
    return j;
}

std::string Comparison::to_text() const {
    constexpr int kWidth = 10;
    std::string out;
    for (std::size_t src = 0; src < sources.size(); ++src)
        out += fmt::format("[{}] {}\n", src + 1, sources[src]);
    out += fmt::format("{:<16}", "strategy");
    for (std::size_t src = 0; src < sources.size(); ++src)
        for (const auto& m : metrics)
            out += fmt::format(" {:>{}}", fmt::format("{}[{}]", m.name, src + 1), kWidth + 3);
    out += "\n";
    for (std::size_t s = 0; s < strategies.size(); ++s) {
        out += fmt::format("{:<16}", strategies[s]);
        for (std::size_t src = 0; src < sources.size(); ++src)
            for (std::size_t m = 0; m < metrics.size(); ++m) {
                const auto& v = values[s][src][m];
                const std::string cell = v ? fmt::format("{:.4f}{}", *v, is_best(s, src, m) ? "*" : " ") : "-";
                out += fmt::format(" {:>{}}", cell, kWidth + 3);
            }
        out += "\n";
    }
    out += "* best per metric within a source\n";
    return out;
}

} // namespace clgen::cli
