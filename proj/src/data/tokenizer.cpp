#include "clgen/data/tokenizer.hpp"

#include "clgen/common/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace clgen::data {

namespace {

constexpr std::string_view kSplitChars = ".,!?;()=\"";

const std::vector<std::string>& special_names() {
    static const std::vector<std::string> names{"<pad>", "<bos>", "<sep>", "<eos>", "<unk>", "<spk1>", "<spk2>"};
    return names;
}

} // namespace

Tokenizer::Tokenizer() {
    for (const auto& s : special_names())
        add(s, 0);
}

void Tokenizer::add(std::string token, int count) {
    if (index_.count(token))
        throw InputError("tokenizer: duplicate entry " + token);
    index_.emplace(token, static_cast<int>(tokens_.size()));
    tokens_.push_back(std::move(token));
    counts_.push_back(count);
}

std::vector<std::string> Tokenizer::split(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty())
            out.push_back(std::move(cur));
        cur.clear();
    };
    for (char c : text) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isspace(uc)) {
            flush();
        } else if (kSplitChars.find(c) != std::string_view::npos) {
            flush();
            out.emplace_back(1, c);
        } else {
            cur.push_back(static_cast<char>(std::tolower(uc)));
        }
    }
    flush();
    return out;
}

std::string Tokenizer::normalize(std::string_view text) {
    std::string out;
    for (const auto& w : split(text)) {
        if (!out.empty())
            out.push_back(' ');
        out += w;
    }
    return out;
}

Tokenizer Tokenizer::build(const std::vector<std::string>& texts, int min_count) {
    if (min_count < 1)
        throw InputError("tokenizer: min_count must be >= 1");
    std::map<std::string, int> freq;
    for (const auto& t : texts)
        for (auto& w : split(t))
            ++freq[std::move(w)];
    std::vector<std::pair<std::string, int>> kept;
    Tokenizer tok;
    for (auto& [w, n] : freq)
        if (n >= min_count && !tok.contains(w))
            kept.emplace_back(w, n);
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    for (auto& [w, n] : kept)
        tok.add(std::move(w), n);
    return tok;
}

int Tokenizer::id(const std::string& word) const {
    const auto it = index_.find(word);
    return it == index_.end() ? kUnk : it->second;
}

const std::string& Tokenizer::token(int id) const {
    if (id < 0 || id >= size())
        throw InputError("tokenizer: id out of range");
    return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Tokenizer::encode(std::string_view text) const {
    std::vector<int> ids;
    for (const auto& w : split(text))
        ids.push_back(id(w));
    return ids;
}

std::string Tokenizer::decode(std::span<const int> ids, bool skip_special) const {
    std::string out;
    for (int i : ids) {
        if (skip_special && i != kUnk && i < kNumSpecial)
            continue;
        if (!out.empty())
            out.push_back(' ');
        out += token(i);
    }
    return out;
}

std::vector<std::string> Tokenizer::words() const {
    return {tokens_.begin() + kNumSpecial, tokens_.end()};
}

void Tokenizer::save(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os)
        throw Error("tokenizer: cannot write " + path.string());
    for (std::size_t i = 0; i < tokens_.size(); ++i)
        os << tokens_[i] << ' ' << i << ' ' << counts_[i] << '\n';
}

Tokenizer Tokenizer::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is)
        throw InputError("tokenizer: cannot open " + path.string());
    Tokenizer tok;
    std::string line;
    int expected = 0;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string word;
        int id = -1, count = -1;
        if (!(ls >> word >> id >> count) || id != expected)
            throw InputError("tokenizer: malformed vocabulary line " + std::to_string(expected + 1));
        if (id < kNumSpecial) {
            if (word != special_names()[static_cast<std::size_t>(id)])
                throw InputError("tokenizer: special token mismatch at id " + std::to_string(id));
        } else {
            tok.add(word, count);
        }
        ++expected;
    }
    if (expected < kNumSpecial)
        throw InputError("tokenizer: vocabulary file lacks special tokens");
    return tok;
}

} // namespace clgen::data
