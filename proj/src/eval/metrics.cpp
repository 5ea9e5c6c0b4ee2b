#include "clgen/eval/metrics.hpp"

#include "clgen/common/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace clgen::eval {

namespace {

std::string lower(std::string s) {
    for (char& c : s)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string squeeze(const std::string& s) {
    std::string out;
    for (const auto& w : words(s)) {
        if (!out.empty())
            out.push_back(' ');
        out += w;
    }
    return out;
}

void check_corpus(const std::vector<std::string>& hyps, const std::vector<std::string>& refs, const char* what) {
    if (hyps.empty())
        throw InputError(std::string(what) + ": empty corpus");
    if (hyps.size() != refs.size())
        throw InputError(std::string(what) + ": hypothesis and reference counts differ");
}

using Ngram = std::vector<std::string>;

std::map<Ngram, int> ngram_counts(const std::vector<std::string>& toks, std::size_t n) {
    std::map<Ngram, int> counts;
    for (std::size_t i = 0; i + n <= toks.size(); ++i)
        ++counts[Ngram(toks.begin() + static_cast<std::ptrdiff_t>(i), toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
    return counts;
}

// Tercom-style search limits.
constexpr std::size_t kMaxShiftSize = 10;
constexpr std::ptrdiff_t kMaxShiftDist = 50;
constexpr std::size_t kMaxShifts = 50;
constexpr std::size_t kMaxShiftCandidates = 1000;
constexpr std::ptrdiff_t kBeamWidth = 25;
constexpr long kInfinity = std::numeric_limits<long>::max() / 4;

enum Op : char { kNop = ' ', kSub = 's', kIns = 'i', kDel = 'd', kUndef = 'x' };

struct Cell {
    long cost = kInfinity;
    char op = kUndef;
};

// Beam-restricted Levenshtein distance from hyp to ref. The returned trace
// rewrites hyp into ref with insertions and deletions seen from the
// reference side.
std::pair<long, std::string> beam_edit_distance(const std::vector<std::string>& h, const std::vector<std::string>& r) {
    const std::size_t nh = h.size(), nr = r.size();
    std::vector<std::vector<Cell>> dist(nh + 1, std::vector<Cell>(nr + 1));
    for (std::size_t j = 0; j <= nr; ++j)
        dist[0][j] = {static_cast<long>(j), kIns};
    const double ratio = nh > 0 ? static_cast<double>(nr) / static_cast<double>(nh) : 1.0;
    std::ptrdiff_t beam = kBeamWidth;
    if (static_cast<double>(kBeamWidth) < ratio / 2)
        beam = static_cast<std::ptrdiff_t>(std::ceil(ratio / 2 + kBeamWidth));
    for (std::size_t i = 1; i <= nh; ++i) {
        const auto diag = static_cast<std::ptrdiff_t>(std::floor(static_cast<double>(i) * ratio));
        const std::size_t lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, diag - beam));
        std::size_t hi = static_cast<std::size_t>(std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(nr) + 1, diag + beam));
        if (i == nh)
            hi = nr + 1;
        for (std::size_t j = lo; j < hi; ++j) {
            if (j == 0) {
                dist[i][j] = {dist[i - 1][j].cost + 1, kDel};
                continue;
            }
            const bool same = h[i - 1] == r[j - 1];
            const Cell options[] = {{dist[i - 1][j - 1].cost + (same ? 0 : 1), same ? kNop : kSub},
                                    {dist[i - 1][j].cost + 1, kDel},
                                    {dist[i][j - 1].cost + 1, kIns}};
            for (const Cell& c : options)
                if (dist[i][j].cost > c.cost)
                    dist[i][j] = c;
        }
    }
    std::string trace;
    std::size_t i = nh, j = nr;
    while (i > 0 || j > 0) {
        const char op = dist[i][j].op;
        trace.push_back(op);
        if (op == kSub || op == kNop) {
            --i;
            --j;
        } else if (op == kIns) {
            --j;
        } else if (op == kDel) {
            --i;
        } else {
            throw NumericalError("ter: edit trace left the search beam");
        }
    }
    std::reverse(trace.begin(), trace.end());
    return {dist[nh][nr].cost, trace};
}

struct Alignment {
    std::map<std::ptrdiff_t, std::ptrdiff_t> ref_to_hyp;
    std::vector<int> ref_err;
    std::vector<int> hyp_err;
};

// The trace is flipped so it describes rewriting the reference into the
// hypothesis.
Alignment align_trace(const std::string& inverse_trace) {
    Alignment a;
    std::ptrdiff_t ph = -1, pr = -1;
    for (char raw : inverse_trace) {
        const char op = raw == kIns ? char(kDel) : raw == kDel ? char(kIns) : raw;
        if (op == kNop || op == kSub) {
            ++ph;
            ++pr;
            a.ref_to_hyp[pr] = ph;
            a.hyp_err.push_back(op == kSub);
            a.ref_err.push_back(op == kSub);
        } else if (op == kIns) {
            ++ph;
            a.hyp_err.push_back(1);
        } else {
            ++pr;
            a.ref_to_hyp[pr] = ph;
            a.ref_err.push_back(1);
        }
    }
    return a;
}

std::vector<std::string> perform_shift(const std::vector<std::string>& w, std::size_t start, std::size_t len,
                                       std::size_t target) {
    // Slice bounds clamp to the sequence end.
    auto at = [&](std::size_t k) { return w.begin() + static_cast<std::ptrdiff_t>(std::min(k, w.size())); };
    std::vector<std::string> out;
    out.reserve(w.size());
    if (target < start) {
        out.insert(out.end(), w.begin(), at(target));
        out.insert(out.end(), at(start), at(start + len));
        out.insert(out.end(), at(target), at(start));
        out.insert(out.end(), at(start + len), w.end());
    } else if (target > start + len) {
        out.insert(out.end(), w.begin(), at(start));
        out.insert(out.end(), at(start + len), at(target));
        out.insert(out.end(), at(start), at(start + len));
        out.insert(out.end(), at(target), w.end());
    } else {
        out.insert(out.end(), w.begin(), at(start));
        out.insert(out.end(), at(start + len), at(len + target));
        out.insert(out.end(), at(start), at(start + len));
        out.insert(out.end(), at(len + target), w.end());
    }
    return out;
}

struct ShiftResult {
    long gain = 0;
    std::vector<std::string> words;
};

ShiftResult best_shift(const std::vector<std::string>& h, const std::vector<std::string>& r, std::size_t& checked) {
    const auto [pre_score, inverse_trace] = beam_edit_distance(h, r);
    const Alignment al = align_trace(inverse_trace);

    bool found = false;
    std::tuple<long, std::size_t, std::ptrdiff_t, std::ptrdiff_t> best_key{};
    std::vector<std::string> best_words;

    auto sum = [](const std::vector<int>& v, std::size_t from, std::size_t len) {
        int s = 0;
        for (std::size_t k = from; k < std::min(v.size(), from + len); ++k)
            s += v[k];
        return s;
    };

    for (std::size_t sh = 0; sh < h.size(); ++sh) {
        for (std::size_t sr = 0; sr < r.size(); ++sr) {
            if (std::abs(static_cast<std::ptrdiff_t>(sr) - static_cast<std::ptrdiff_t>(sh)) > kMaxShiftDist)
                continue;
            for (std::size_t len = 1; len <= kMaxShiftSize && sh + len <= h.size() && sr + len <= r.size(); ++len) {
                if (h[sh + len - 1] != r[sr + len - 1])
                    break;
                if (sum(al.hyp_err, sh, len) == 0 || sum(al.ref_err, sr, len) == 0)
                    continue;
                const std::ptrdiff_t aligned = al.ref_to_hyp.at(static_cast<std::ptrdiff_t>(sr));
                if (static_cast<std::ptrdiff_t>(sh) <= aligned && aligned < static_cast<std::ptrdiff_t>(sh + len))
                    continue;
                std::ptrdiff_t prev = -1;
                for (std::ptrdiff_t offset = -1; offset < static_cast<std::ptrdiff_t>(len); ++offset) {
                    const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(sr) + offset;
                    std::ptrdiff_t idx;
                    if (pos == -1)
                        idx = 0;
                    else if (auto it = al.ref_to_hyp.find(pos); it != al.ref_to_hyp.end())
                        idx = it->second + 1;
                    else
                        break;
                    if (idx == prev)
                        continue;
                    prev = idx;
                    auto shifted = perform_shift(h, sh, len, static_cast<std::size_t>(idx));
                    const long gain = pre_score - beam_edit_distance(shifted, r).first;
                    const auto key = std::make_tuple(gain, len, -static_cast<std::ptrdiff_t>(sh), -idx);
                    ++checked;
                    if (!found || key > best_key) {
                        found = true;
                        best_key = key;
                        best_words = std::move(shifted);
                    }
                }
                if (checked >= kMaxShiftCandidates)
                    goto done;
            }
        }
    }
done:
    if (!found)
        return {0, h};
    return {std::get<0>(best_key), std::move(best_words)};
}

} // namespace

std::vector<std::string> words(const std::string& text) {
    std::istringstream is(lower(text));
    std::vector<std::string> out;
    for (std::string w; is >> w;)
        out.push_back(w);
    return out;
}

double bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references) {
    check_corpus(hypotheses, references, "bleu");
    std::size_t sys_len = 0, ref_len = 0;
    std::array<std::size_t, 4> correct{}, total{};
    for (std::size_t s = 0; s < hypotheses.size(); ++s) {
        const auto h = words(hypotheses[s]);
        const auto r = words(references[s]);
        sys_len += h.size();
        ref_len += r.size();
        for (std::size_t n = 1; n <= 4; ++n) {
            const auto hc = ngram_counts(h, n);
            const auto rc = ngram_counts(r, n);
            for (const auto& [gram, c] : hc) {
                total[n - 1] += static_cast<std::size_t>(c);
                if (auto it = rc.find(gram); it != rc.end())
                    correct[n - 1] += static_cast<std::size_t>(std::min(c, it->second));
            }
        }
    }
    double log_sum = 0.0;
    for (std::size_t n = 0; n < 4; ++n) {
        if (total[n] == 0 || correct[n] == 0)
            return 0.0;
        log_sum += std::log(static_cast<double>(correct[n]) / static_cast<double>(total[n]));
    }
    double bp = 1.0;
    if (sys_len < ref_len)
        bp = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(sys_len));
    return 100.0 * bp * std::exp(log_sum / 4.0);
}

TerStats ter_sentence(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
    if (ref.empty())
        throw InputError("ter: empty reference");
    std::vector<std::string> current = hyp;
    std::size_t shifts = 0, checked = 0;
    while (shifts < kMaxShifts) {
        ShiftResult step = best_shift(current, ref, checked);
        if (checked >= kMaxShiftCandidates || step.gain <= 0)
            break;
        ++shifts;
        current = std::move(step.words);
    }
    const long edits = beam_edit_distance(current, ref).first;
    return {shifts + static_cast<std::size_t>(edits), ref.size()};
}

double ter(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references) {
    check_corpus(hypotheses, references, "ter");
    std::size_t edits = 0, length = 0;
    for (std::size_t s = 0; s < hypotheses.size(); ++s) {
        const TerStats st = ter_sentence(words(hypotheses[s]), words(references[s]));
        edits += st.edits;
        length += st.ref_length;
    }
    return static_cast<double>(edits) / static_cast<double>(length);
}

double distinct_ngrams(const std::vector<std::string>& corpus, int n) {
    if (n < 1 || n > 4)
        throw InputError("distinct_ngrams: n must lie in 1..4");
    std::set<Ngram> unique;
    std::size_t total = 0;
    for (const auto& sentence : corpus) {
        const auto toks = words(sentence);
        for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= toks.size(); ++i) {
            unique.emplace(toks.begin() + static_cast<std::ptrdiff_t>(i),
                           toks.begin() + static_cast<std::ptrdiff_t>(i) + n);
            ++total;
        }
    }
    if (total == 0) {
        spdlog::warn("distinct_ngrams: corpus has no {}-grams", n);
        return 0.0;
    }
    return static_cast<double>(unique.size()) / static_cast<double>(total);
}

double slot_error_rate(const std::string& utterance, const data::SlotList& slots) {
    if (slots.empty())
        return 0.0;
    const std::string text = squeeze(utterance);
    std::size_t missing = 0;
    for (const auto& [name, value] : slots)
        if (text.find(squeeze(value)) == std::string::npos)
            ++missing;
    return static_cast<double>(missing) / static_cast<double>(slots.size());
}

std::size_t select_best_of_k(const std::vector<std::string>& candidates, const data::SlotList& slots) {
    if (candidates.empty())
        throw InputError("select_best_of_k: no candidates");
    std::size_t best = 0;
    double best_err = slot_error_rate(candidates[0], slots);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double err = slot_error_rate(candidates[i], slots);
        if (err < best_err) {
            best = i;
            best_err = err;
        }
    }
    return best;
}

} // namespace clgen::eval
