#include "clgen/cli/runner.hpp"

#include "clgen/common/error.hpp"
#include "clgen/data/curriculum.hpp"
#include "clgen/data/fixtures.hpp"
#include "clgen/eval/evaluate.hpp"
#include "clgen/model/checkpoint.hpp"
#include "clgen/strategy/trainer.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

namespace clgen::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out)
        throw Error("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::vector<data::RawRecord>> by_domain(std::vector<data::RawRecord> records) {
    std::map<std::string, std::vector<data::RawRecord>> out;
    for (auto& r : records)
        out[r.domain].push_back(std::move(r));
    return out;
}

std::vector<std::string> key_list(const std::map<std::string, std::vector<data::RawRecord>>& m) {
    std::vector<std::string> out;
    for (const auto& [k, _] : m)
        out.push_back(k);
    return out;
}

data::Tokenizer build_vocab(const RunConfig& config, const Corpus& corpus, const std::string& first) {
    std::vector<std::string> texts;
    for (const auto& [domain, records] : corpus.train) {
        if (config.vocab_scope == VocabScope::FirstDomain && domain != first)
            continue;
        for (const auto& r : records) {
            texts.push_back(data::input_text(r, config.format));
            texts.push_back(r.response);
        }
    }
    return data::Tokenizer::build(texts, config.min_count);
}

json step_json(const strategy::StepRecord& r) {
    json j;
    j["step"] = r.step;
    j["domain"] = r.domain;
    j["l_theta"] = r.l_theta;
    j["l_bnnm"] = r.l_bnnm ? json(*r.l_bnnm) : json(nullptr);
    j["l_ewc"] = r.l_ewc ? json(*r.l_ewc) : json(nullptr);
    j["rank"] = r.rank ? json(*r.rank) : json(nullptr);
    j["grad_norm"] = r.grad_norm;
    j["rows"] = r.rows;
    return j;
}

/// Fixture data lives under <output>/data; dry runs use a scratch directory.
fs::path prepare_data(const RunConfig& config, const fs::path& fixture_root) {
    if (!config.fixtures)
        return config.data_dir;
    data::generate_fixtures(fixture_root, config.fixture);
    return fixture_root / data::to_string(config.mode);
}

const char* status_name(CellStatus s) {
    switch (s) {
    case CellStatus::Done: return "done";
    case CellStatus::Skipped: return "skipped";
    case CellStatus::Failed: return "failed";
    }
    return "?";
}

} // namespace

std::vector<std::string> Corpus::domains() const { return key_list(train); }

Corpus load_corpus(const fs::path& dir, data::Mode mode) {
    Corpus c;
    c.train = by_domain(data::load_jsonl(dir / "train.jsonl", mode));
    c.test = by_domain(data::load_jsonl(dir / "test.jsonl", mode));
    if (c.train.empty())
        throw InputError(dir.string() + ": no training records");
    if (key_list(c.train) != key_list(c.test))
        throw InputError(dir.string() + ": train and test splits cover different domains");
    return c;
}

fs::path Cell::relative_dir() const {
    return fs::path("cells") / strategy / fmt::format("perm{}_seed{}", permutation, seed);
}

std::vector<Cell> plan_cells(const RunConfig& config, const std::vector<std::string>& domains) {
    std::vector<Cell> cells;
    for (const auto& s : config.strategies)
        for (int k = 0; k < config.permutations; ++k)
            for (const auto seed : config.seeds)
                cells.push_back({s.name, k, seed, data::permute_domains(domains, seed, static_cast<std::uint64_t>(k))});
    return cells;
}

void run_cell(const RunConfig& config, const Corpus& corpus, const Cell& cell, const fs::path& dir) {
    const auto found = std::find_if(config.strategies.begin(), config.strategies.end(),
                                    [&](const auto& s) { return s.name == cell.strategy; });
    if (found == config.strategies.end())
        throw InputError("unknown strategy " + cell.strategy);
    const strategy::StrategyConfig& scfg = *found;

    const data::Tokenizer tok = build_vocab(config, corpus, cell.order.front());
    std::map<std::string, std::vector<data::Example>> train, test;
    for (const auto& [domain, records] : corpus.train)
        train[domain] = data::format_all(records, tok, config.format);
    for (const auto& [domain, records] : corpus.test)
        test[domain] = data::format_all(records, tok, config.format);

    model::ModelConfig mcfg = config.model;
    mcfg.vocab_size = tok.size();
    model::TransformerLM model(mcfg, cell.seed);

    strategy::TrainOptions topts;
    topts.seed = cell.seed;
    topts.rank_every = config.rank_every;
    topts.rank_rel_tol = config.rank_rel_tol;
    topts.tokenizer = &tok;
    topts.format = config.format;
    strategy::ContinualTrainer trainer(scfg, topts);

    data::CurriculumFeed feed(std::move(train), cell.order);
    if (scfg.kind == strategy::StrategyKind::Multi) {
        trainer.train_domain(model, "all", feed.take_all());
    } else {
        while (!feed.done()) {
            const auto& examples = feed.open_next();
            spdlog::debug("{}: training {} ({} examples)", cell.relative_dir().string(), feed.current_domain(),
                          examples.size());
            trainer.train_domain(model, feed.current_domain(), examples);
        }
    }

    // Training artifacts first, so they survive a failed evaluation.
    fs::create_directories(dir);
    tok.save(dir / "vocab.txt");
    model::save_checkpoint(dir / "model.ckpt", model);
    std::string rank_csv = "step,domain,rank\n";
    std::string loss_log;
    for (const auto& r : trainer.log()) {
        if (r.rank)
            rank_csv += fmt::format("{},{},{}\n", r.step, r.domain, *r.rank);
        loss_log += step_json(r).dump() + "\n";
    }
    write_text(dir / "rank_trace.csv", rank_csv);
    write_text(dir / "loss_log.jsonl", loss_log);

    eval::Hypotheses hyps;
    const eval::MetricReport report =
        eval::evaluate_curriculum(model, test, cell.order, tok, config.generation, cell.seed, &hyps);
    write_text(dir / "bleu_by_position.csv", report.position_csv());

    std::string hyp_lines;
    for (const auto& [domain, lines] : hyps)
        for (std::size_t i = 0; i < lines.size(); ++i)
            hyp_lines += json{{"domain", domain}, {"index", i}, {"hypothesis", lines[i]}}.dump() + "\n";
    write_text(dir / "hypotheses.jsonl", hyp_lines);

    json j;
    j["strategy"] = cell.strategy;
    j["kind"] = strategy::to_string(scfg.kind);
    j["permutation"] = cell.permutation;
    j["seed"] = cell.seed;
    j["order"] = cell.order;
    j["metrics"] = report.to_json();
    write_text(dir / "report.json", j.dump(2) + "\n");
    write_text(dir / "report.txt",
               fmt::format("{} permutation {} seed {}\norder: {}\n\n{}", cell.strategy, cell.permutation, cell.seed,
                           fmt::join(cell.order, " > "), report.to_text()));
    write_text(dir / "DONE", "");
}

int run_experiment(RunConfig config, const RunOptions& options, std::ostream& out) {
    if (options.seed)
        config.seeds = {*options.seed};
    if (options.parallel < 1)
        throw InputError("--parallel must be >= 1");
    config.validate();

    Corpus corpus;
    if (options.dry_run) {
        const fs::path scratch =
            fs::temp_directory_path() / fmt::format("clgen-dry-{:016x}", stream_seed(config.fixture.seed, "dry-run"));
        try {
            corpus = load_corpus(prepare_data(config, scratch), config.mode);
        } catch (...) {
            if (config.fixtures)
                fs::remove_all(scratch);
            throw;
        }
        if (config.fixtures)
            fs::remove_all(scratch);
    } else {
        corpus = load_corpus(prepare_data(config, config.output / "data"), config.mode);
    }

    const std::vector<Cell> cells = plan_cells(config, corpus.domains());
    if (options.dry_run) {
        out << fmt::format("{} cells, output {}\n", cells.size(), config.output.string());
        for (const auto& c : cells) {
            const bool done = fs::exists(config.output / c.relative_dir() / "DONE");
            out << fmt::format("  {:<40} {}{}\n", c.relative_dir().string(), fmt::join(c.order, " > "),
                               done && !options.force ? "  [done]" : "");
        }
        return 0;
    }

    fs::create_directories(config.output);
    std::vector<CellOutcome> outcomes(cells.size());
    std::atomic<std::size_t> next{0};
    std::mutex out_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            const Cell& cell = cells[i];
            const fs::path dir = config.output / cell.relative_dir();
            CellOutcome& outcome = outcomes[i];
            outcome.cell = cell;
            if (fs::exists(dir / "DONE") && !options.force) {
                outcome.status = CellStatus::Skipped;
            } else {
                try {
                    fs::remove_all(dir);
                    run_cell(config, corpus, cell, dir);
                    outcome.status = CellStatus::Done;
                } catch (const std::exception& e) {
                    outcome.status = CellStatus::Failed;
                    outcome.error = e.what();
                    spdlog::error("{}: {}", cell.relative_dir().string(), e.what());
                    std::error_code ec;
                    fs::create_directories(dir, ec);
                    std::ofstream(dir / "FAILED") << outcome.error << "\n";
                }
            }
            std::lock_guard lock(out_mutex);
            out << fmt::format("[{}/{}] {} {}\n", i + 1, cells.size(), cell.relative_dir().string(),
                               status_name(outcome.status));
            out.flush();
        }
    };
    const int threads = std::min<int>(options.parallel, static_cast<int>(cells.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }

    const ResultsTable table = collect_results(config.output, cells);
    write_text(config.output / "results.json", table.to_json().dump(2) + "\n");
    write_text(config.output / "results.txt", table.to_text());
    out << table.to_text();

    const bool ok = std::none_of(outcomes.begin(), outcomes.end(),
                                 [](const CellOutcome& o) { return o.status == CellStatus::Failed; });
    return ok ? 0 : 1;
}

ResultsTable collect_results(const fs::path& output, const std::vector<Cell>& cells) {
    ResultsTable table;
    std::vector<std::string> strategies;
    std::map<std::string, std::vector<eval::MetricReport>> done;
    for (const auto& cell : cells) {
        ResultsTable::Row row{cell, "failed", std::nullopt};
        const fs::path dir = output / cell.relative_dir();
        if (fs::exists(dir / "DONE")) {
            row.report = eval::MetricReport::from_json(json::parse(read_text(dir / "report.json")).at("metrics"));
            row.status = "done";
            done[cell.strategy].push_back(*row.report);
        }
        if (std::find(strategies.begin(), strategies.end(), cell.strategy) == strategies.end())
            strategies.push_back(cell.strategy);
        table.rows.push_back(std::move(row));
    }
    for (const auto& s : strategies)
        if (!done[s].empty())
            table.aggregate.emplace_back(s, eval::average_reports(done[s]));
    return table;
}

json ResultsTable::to_json() const {
    json j;
    j["cells"] = json::array();
    for (const auto& row : rows) {
        json c;
        c["strategy"] = row.cell.strategy;
        c["permutation"] = row.cell.permutation;
        c["seed"] = row.cell.seed;
        c["order"] = row.cell.order;
        c["status"] = row.status;
        c["dir"] = row.cell.relative_dir().generic_string();
        c["macro"] = row.report ? json{{"bleu", row.report->macro.bleu},
                                       {"ter", row.report->macro.ter},
                                       {"distinct", row.report->macro.distinct},
                                       {"err", row.report->macro.err}}
                                : json(nullptr);
        j["cells"].push_back(std::move(c));
    }
    j["aggregate"] = json::object();
    for (const auto& [name, report] : aggregate)
        j["aggregate"][name] = report.to_json();
    return j;
}

std::string ResultsTable::to_text() const {
    std::map<std::string, std::pair<int, int>> counts;
    for (const auto& row : rows) {
        auto& [ok, total] = counts[row.cell.strategy];
        ok += row.status == "done";
        ++total;
    }
    std::string s = fmt::format("{:<16} {:>7} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}\n", "strategy", "cells",
                                "BLEU", "TER", "D-1", "D-2", "D-3", "D-4", "ERR");
    std::set<std::string> printed;
    for (const auto& row : rows) {
        const std::string& name = row.cell.strategy;
        if (!printed.insert(name).second)
            continue;
        const auto [ok, total] = counts[name];
        const auto agg = std::find_if(aggregate.begin(), aggregate.end(), [&](const auto& a) { return a.first == name; });
        if (agg == aggregate.end()) {
            s += fmt::format("{:<16} {:>7}\n", name, fmt::format("{}/{}", ok, total));
            continue;
        }
        const auto& m = agg->second.macro;
        s += fmt::format("{:<16} {:>7} {:>8.2f} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f}\n", name,
                         fmt::format("{}/{}", ok, total), m.bleu, m.ter, m.distinct[0], m.distinct[1], m.distinct[2],
                         m.distinct[3], m.err);
    }
    return s;
}

} // namespace clgen::cli
