#pragma once

#include <json.hpp>

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace clgen::eval {

struct DomainMetrics {
    std::string domain;
    double bleu = 0.0;
    double ter = 0.0;
    std::array<double, 4> distinct{};
    double err = 0.0;
    std::size_t samples = 0;
};

struct PositionScore {
    std::size_t position = 0;
    std::string domain;
    double bleu = 0.0;
};

/// Per-domain metrics (sorted by domain), their macro average, and test
/// BLEU by curriculum position.
struct MetricReport {
    std::vector<DomainMetrics> domains;
    DomainMetrics macro;
    std::vector<PositionScore> by_position;

    /// Recomputes `macro` as the unweighted mean over domains.
    void finalize();
    /// Throws InputError if any metric is outside its range.
    void validate() const;
    const DomainMetrics& domain(const std::string& name) const;

    nlohmann::ordered_json to_json() const;
    static MetricReport from_json(const nlohmann::ordered_json& j);
    std::string to_text() const;
    /// "position,domain,bleu" rows.
    std::string position_csv() const;
};

/// Element-wise mean of reports over the same domains. Positions are
/// averaged by index; their domain label becomes "*" where runs disagree.
MetricReport average_reports(const std::vector<MetricReport>& reports);

} // namespace clgen::eval
