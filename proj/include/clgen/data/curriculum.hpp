#pragma once

#include "clgen/common/rng.hpp"
#include "clgen/data/example.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace clgen::data {

/// Seeded permutation of the (sorted) domain list.
std::vector<std::string> permute_domains(std::vector<std::string> domains, std::uint64_t seed, std::uint64_t index);

/// Shuffled index batches over n items; the last batch may be partial.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng);

/// Hands out each domain's training data once, in curriculum order. Data of
/// a finished domain is released when the next one opens, so it cannot be
/// read again except through replay memory.
class CurriculumFeed {
public:
    CurriculumFeed(std::map<std::string, std::vector<Example>> train, std::vector<std::string> order);

    std::size_t size() const noexcept { return order_.size(); }
    std::size_t opened() const noexcept { return opened_; }
    bool done() const noexcept { return opened_ == order_.size(); }
    const std::vector<std::string>& order() const noexcept { return order_; }

    /// Opens the next domain and returns its training examples.
    const std::vector<Example>& open_next();
    const std::string& current_domain() const;
    const std::vector<Example>& current() const;

    /// Union of every domain in curriculum order; only before any domain
    /// has been opened. Consumes the feed.
    std::vector<Example> take_all();

private:
    std::map<std::string, std::vector<Example>> train_;
    std::vector<std::string> order_;
    std::size_t opened_ = 0;
};

} // namespace clgen::data
