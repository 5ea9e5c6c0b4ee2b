#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace clgen::data {

/// Word-level vocabulary with a frequency cutoff. Ids 0..6 are reserved for
/// the special tokens below.
class Tokenizer {
public:
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kSep = 2;
    static constexpr int kEos = 3;
    static constexpr int kUnk = 4;
    static constexpr int kSpeaker1 = 5;
    static constexpr int kSpeaker2 = 6;
    static constexpr int kNumSpecial = 7;

    Tokenizer();

    /// Lowercases and splits punctuation into separate words.
    static std::vector<std::string> split(std::string_view text);
    static std::string normalize(std::string_view text);

    static Tokenizer build(const std::vector<std::string>& texts, int min_count = 2);

    std::vector<int> encode(std::string_view text) const;
    /// Joins tokens with single spaces. Structural specials are dropped when
    /// skip_special is set; unknown words decode as "<unk>".
    std::string decode(std::span<const int> ids, bool skip_special = true) const;

    int id(const std::string& word) const;
    const std::string& token(int id) const;
    int count(int id) const { return counts_.at(static_cast<std::size_t>(id)); }
    int size() const noexcept { return static_cast<int>(tokens_.size()); }
    bool contains(const std::string& word) const { return index_.count(word) != 0; }

    /// Vocabulary entries that are not special tokens, in id order.
    std::vector<std::string> words() const;

    /// One line per entry: "token id count".
    void save(const std::filesystem::path& path) const;
    static Tokenizer load(const std::filesystem::path& path);

    friend bool operator==(const Tokenizer& a, const Tokenizer& b) {
        return a.tokens_ == b.tokens_ && a.counts_ == b.counts_;
    }

private:
    void add(std::string token, int count);

    std::vector<std::string> tokens_;
    std::vector<int> counts_;
    std::unordered_map<std::string, int> index_;
};

} // namespace clgen::data
