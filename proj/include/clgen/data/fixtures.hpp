#pragma once

#include <cstdint>
#include <filesystem>

namespace clgen::data {

struct FixtureOptions {
    std::uint64_t seed = 1;
    int train_per_domain = 200;
    int test_per_domain = 50;
};

/// Writes templated corpora to <out>/task-oriented/{train,test}.jsonl and
/// <out>/chitchat/{train,test}.jsonl. Five domains each.
void generate_fixtures(const std::filesystem::path& out, const FixtureOptions& opts);

} // namespace clgen::data
