#include "clgen/data/curriculum.hpp"

#include "clgen/common/error.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace clgen::data {

std::vector<std::string> permute_domains(std::vector<std::string> domains, std::uint64_t seed, std::uint64_t index) {
    std::sort(domains.begin(), domains.end());
    if (std::adjacent_find(domains.begin(), domains.end()) != domains.end())
        throw InputError("curriculum: duplicate domain");
    Rng rng = make_stream(seed, "curriculum", index);
    std::shuffle(domains.begin(), domains.end(), rng);
    return domains;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
    if (batch_size == 0)
        throw InputError("batches: batch size must be >= 1");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < n; i += batch_size)
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch_size)));
    return out;
}

CurriculumFeed::CurriculumFeed(std::map<std::string, std::vector<Example>> train, std::vector<std::string> order)
    : train_(std::move(train)), order_(std::move(order)) {
    if (order_.empty())
        throw InputError("curriculum: no domains");
    std::set<std::string> seen;
    for (const auto& d : order_) {
        if (!seen.insert(d).second)
            throw InputError("curriculum: domain listed twice: " + d);
        const auto it = train_.find(d);
        if (it == train_.end() || it->second.empty())
            throw InputError("curriculum: no training data for domain " + d);
    }
}

const std::vector<Example>& CurriculumFeed::open_next() {
    if (done())
        throw Error("curriculum: every domain has been opened");
    if (opened_ > 0)
        train_.erase(order_[opened_ - 1]);
    return train_.at(order_[opened_++]);
}

const std::string& CurriculumFeed::current_domain() const {
    if (opened_ == 0)
        throw Error("curriculum: no domain opened yet");
    return order_[opened_ - 1];
}

const std::vector<Example>& CurriculumFeed::current() const { return train_.at(current_domain()); }

std::vector<Example> CurriculumFeed::take_all() {
    if (opened_ != 0)
        throw Error("curriculum: union requested after sequential training began");
    std::vector<Example> all;
    for (const auto& d : order_) {
        auto& part = train_.at(d);
        all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    train_.clear();
    opened_ = order_.size();
    return all;
}

} // namespace clgen::data
