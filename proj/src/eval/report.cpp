#include "clgen/eval/report.hpp"

#include "clgen/common/error.hpp"

#include <fmt/format.h>

#include <sstream>

namespace clgen::eval {

namespace {

nlohmann::ordered_json metrics_json(const DomainMetrics& m) {
    nlohmann::ordered_json j;
    j["bleu"] = m.bleu;
    j["ter"] = m.ter;
    j["distinct"] = m.distinct;
    j["err"] = m.err;
    j["samples"] = m.samples;
    return j;
}

DomainMetrics metrics_from_json(const std::string& name, const nlohmann::ordered_json& j) {
    DomainMetrics m;
    m.domain = name;
    m.bleu = j.at("bleu").get<double>();
    m.ter = j.at("ter").get<double>();
    m.distinct = j.at("distinct").get<std::array<double, 4>>();
    m.err = j.at("err").get<double>();
    m.samples = j.at("samples").get<std::size_t>();
    return m;
}

void accumulate(DomainMetrics& into, const DomainMetrics& m, double w) {
    into.bleu += w * m.bleu;
    into.ter += w * m.ter;
    for (std::size_t n = 0; n < 4; ++n)
        into.distinct[n] += w * m.distinct[n];
    into.err += w * m.err;
}

} // namespace

void MetricReport::finalize() {
    macro = DomainMetrics{};
    macro.domain = "macro";
    if (domains.empty())
        return;
    const double w = 1.0 / static_cast<double>(domains.size());
    for (const auto& d : domains) {
        accumulate(macro, d, w);
        macro.samples += d.samples;
    }
}

void MetricReport::validate() const {
    auto check = [](const DomainMetrics& m) {
        auto bad = [&](const char* what) { throw InputError("metric report: " + m.domain + ": " + what); };
        if (!(m.bleu >= 0.0 && m.bleu <= 100.0))
            bad("BLEU outside [0, 100]");
        if (!(m.ter >= 0.0))
            bad("negative TER");
        for (double d : m.distinct)
            if (!(d >= 0.0 && d <= 1.0))
                bad("distinct-n outside [0, 1]");
        if (!(m.err >= 0.0 && m.err <= 1.0))
            bad("ERR outside [0, 1]");
    };
    for (const auto& d : domains)
        check(d);
    check(macro);
}

const DomainMetrics& MetricReport::domain(const std::string& name) const {
    for (const auto& d : domains)
        if (d.domain == name)
            return d;
    throw InputError("metric report has no domain '" + name + "'");
}

nlohmann::ordered_json MetricReport::to_json() const {
    nlohmann::ordered_json j;
    j["domains"] = nlohmann::ordered_json::object();
    for (const auto& d : domains)
        j["domains"][d.domain] = metrics_json(d);
    j["macro"] = metrics_json(macro);
    j["by_position"] = nlohmann::ordered_json::array();
    for (const auto& p : by_position)
        j["by_position"].push_back({{"position", p.position}, {"domain", p.domain}, {"bleu", p.bleu}});
    return j;
}

MetricReport MetricReport::from_json(const nlohmann::ordered_json& j) {
    MetricReport r;
    try {
        for (const auto& [name, value] : j.at("domains").items())
            r.domains.push_back(metrics_from_json(name, value));
        r.macro = metrics_from_json("macro", j.at("macro"));
        for (const auto& p : j.at("by_position"))
            r.by_position.push_back(
                {p.at("position").get<std::size_t>(), p.at("domain").get<std::string>(), p.at("bleu").get<double>()});
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("metric report: ") + e.what());
    }
    return r;
}

std::string MetricReport::to_text() const {
    std::ostringstream os;
    os << fmt::format("{:<14} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}\n", "domain", "BLEU", "TER", "dist-1",
                      "dist-2", "dist-3", "dist-4", "ERR", "n");
    auto row = [&](const DomainMetrics& m) {
        os << fmt::format("{:<14} {:>7.2f} {:>7.3f} {:>7.3f} {:>7.3f} {:>7.3f} {:>7.3f} {:>7.3f} {:>7}\n", m.domain,
                          m.bleu, m.ter, m.distinct[0], m.distinct[1], m.distinct[2], m.distinct[3], m.err, m.samples);
    };
    for (const auto& d : domains)
        row(d);
    row(macro);
    if (!by_position.empty()) {
        os << "\nBLEU by curriculum position\n";
        for (const auto& p : by_position)
            os << fmt::format("{:>3} {:<14} {:>7.2f}\n", p.position, p.domain, p.bleu);
    }
    return os.str();
}

std::string MetricReport::position_csv() const {
    std::string out = "position,domain,bleu\n";
    for (const auto& p : by_position)
        out += fmt::format("{},{},{:.17g}\n", p.position, p.domain, p.bleu);
    return out;
}

MetricReport average_reports(const std::vector<MetricReport>& reports) {
    if (reports.empty())
        throw InputError("average_reports: no reports");
    MetricReport avg;
    const double w = 1.0 / static_cast<double>(reports.size());
    for (const auto& d : reports.front().domains) {
        DomainMetrics m;
        m.domain = d.domain;
        for (const auto& r : reports) {
            const DomainMetrics& other = r.domain(d.domain);
            accumulate(m, other, w);
            m.samples += other.samples;
        }
        avg.domains.push_back(m);
    }
    for (const auto& r : reports)
        if (r.domains.size() != avg.domains.size())
            throw InputError("average_reports: reports cover different domains");
    const std::size_t positions = reports.front().by_position.size();
    for (std::size_t i = 0; i < positions; ++i) {
        PositionScore p{i, reports.front().by_position[i].domain, 0.0};
        for (const auto& r : reports) {
            if (r.by_position.size() != positions)
                throw InputError("average_reports: curricula differ in length");
            p.bleu += w * r.by_position[i].bleu;
            if (r.by_position[i].domain != p.domain)
                p.domain = "*";
        }
        avg.by_position.push_back(p);
    }
    avg.finalize();
    return avg;
}

} // namespace clgen::eval
