#pragma once

#include "clgen/cli/config.hpp"
#include "clgen/data/example.hpp"
#include "clgen/eval/report.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace clgen::cli {

/// Raw records of one corpus split by domain.
struct Corpus {
    std::map<std::string, std::vector<data::RawRecord>> train;
    std::map<std::string, std::vector<data::RawRecord>> test;

    std::vector<std::string> domains() const;
};

/// Loads <dir>/train.jsonl and <dir>/test.jsonl; both must cover the same domains.
Corpus load_corpus(const std::filesystem::path& dir, data::Mode mode);

/// One (strategy, permutation, seed) run.
struct Cell {
    std::string strategy;
    int permutation = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> order;

    /// cells/<strategy>/perm<k>_seed<s>
    std::filesystem::path relative_dir() const;
};

std::vector<Cell> plan_cells(const RunConfig& config, const std::vector<std::string>& domains);

enum class CellStatus { Done, Skipped, Failed };

struct CellOutcome {
    Cell cell;
    CellStatus status = CellStatus::Done;
    std::string error;
};

/// Trains and evaluates one cell, writing its artifacts into `dir`. The
/// DONE marker is written last.
void run_cell(const RunConfig& config, const Corpus& corpus, const Cell& cell, const std::filesystem::path& dir);

struct RunOptions {
    std::optional<std::uint64_t> seed;
    bool dry_run = false;
    bool force = false;
    int parallel = 1;
};

/// Runs every planned cell and writes results.json and results.txt.
/// Returns 0 when every cell completed, 1 otherwise.
int run_experiment(RunConfig config, const RunOptions& options, std::ostream& out);

/// Summary over the planned cells under `output`. Cells without a DONE
/// marker are listed as failed and left out of the aggregate.
struct ResultsTable {
    struct Row {
        Cell cell;
        std::string status;
        std::optional<eval::MetricReport> report;
    };
    std::vector<Row> rows;
    std::vector<std::pair<std::string, eval::MetricReport>> aggregate;

    nlohmann::ordered_json to_json() const;
    std::string to_text() const;
};

ResultsTable collect_results(const std::filesystem::path& output, const std::vector<Cell>& cells);

} // namespace clgen::cli
