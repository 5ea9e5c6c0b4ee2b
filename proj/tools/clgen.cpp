#include "clgen/cli/compare.hpp"
#include "clgen/cli/config.hpp"
#include "clgen/cli/runner.hpp"
#include "clgen/common/error.hpp"
#include "clgen/data/fixtures.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Continual learning for dialogue generation: training, evaluation and comparison"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    auto* run = app.add_subcommand("run", "Run every (strategy, permutation, seed) cell of a config");
    std::string config_path;
    std::uint64_t seed = 0;
    clgen::cli::RunOptions run_opts;
    run->add_option("config", config_path, "INI config file")->required()->check(CLI::ExistingFile);
    auto* seed_opt = run->add_option("--seed", seed, "Run only this seed instead of the configured list");
    run->add_flag("--dry-run", run_opts.dry_run, "Validate the config and print the planned cells");
    run->add_flag("--force", run_opts.force, "Rerun cells that already completed");
    run->add_option("--parallel", run_opts.parallel, "Cells to run concurrently")->check(CLI::PositiveNumber);

    auto* compare = app.add_subcommand("compare", "Compare aggregate results of several output directories");
    std::vector<std::string> dirs;
    std::string compare_json;
    compare->add_option("dirs", dirs, "Results directories")->required()->check(CLI::ExistingDirectory);
    compare->add_option("--json", compare_json, "Also write the comparison as JSON");

    auto* fixtures = app.add_subcommand("fixtures", "Synthetic corpora");
    fixtures->require_subcommand(1);
    auto* generate = fixtures->add_subcommand("generate", "Write the fixture corpora");
    std::string fixture_out;
    clgen::data::FixtureOptions fixture_opts;
    generate->add_option("out", fixture_out, "Output directory")->required();
    generate->add_option("--seed", fixture_opts.seed, "Generator seed");
    generate->add_option("--train", fixture_opts.train_per_domain, "Training records per domain")
        ->check(CLI::PositiveNumber);
    generate->add_option("--test", fixture_opts.test_per_domain, "Test records per domain")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

    try {
        if (*run) {
            if (*seed_opt)
                run_opts.seed = seed;
            auto config = clgen::cli::RunConfig::load(config_path);
            return clgen::cli::run_experiment(std::move(config), run_opts, std::cout);
        }
        if (*compare) {
            std::vector<std::filesystem::path> paths(dirs.begin(), dirs.end());
            const auto table = clgen::cli::compare_results(paths);
            std::cout << table.to_text();
            if (!compare_json.empty()) {
                std::ofstream out(compare_json);
                out << table.to_json().dump(2) << "\n";
                if (!out)
                    throw clgen::Error("cannot write " + compare_json);
            }
            return 0;
        }
        if (*generate) {
            clgen::data::generate_fixtures(fixture_out, fixture_opts);
            std::cout << "fixtures written to " << fixture_out << "\n";
            return 0;
        }
    } catch (const clgen::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
