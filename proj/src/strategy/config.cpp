#include "clgen/strategy/config.hpp"

#include "clgen/common/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <vector>

namespace clgen::strategy {

namespace {

std::string squash(const std::string& s) {
    std::string out;
    for (char c : s)
        if (c != '-' && c != '_' && c != ' ')
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

const std::vector<std::pair<StrategyKind, std::string>> kKinds = {
    {StrategyKind::Finetune, "Finetune"},   {StrategyKind::Replay, "Replay"},   {StrategyKind::EWC, "EWC"},
    {StrategyKind::AGEM, "A-GEM"},          {StrategyKind::TextMixup, "TextMixup"},
    {StrategyKind::TMBNNM, "TM_BNNM"},      {StrategyKind::Multi, "Multi"},
};

const std::vector<std::pair<ReplayAugment, std::string>> kAugments = {
    {ReplayAugment::None, "none"},     {ReplayAugment::Delete, "delete"},         {ReplayAugment::Insert, "insert"},
    {ReplayAugment::Swap, "swap"},     {ReplayAugment::Substitute, "substitute"}, {ReplayAugment::Dropout, "dropout"},
};

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end)
        throw InputError("strategy key '" + key + "': cannot parse '" + text + "'");
    return value;
}

std::set<std::string> allowed_keys(StrategyKind kind) {
    std::set<std::string> keys{"kind", "lr", "epochs", "batch_size", "weight_decay", "clip_norm"};
    if (uses_replay(kind))
        keys.insert("memory");
    if (uses_mixup(kind))
        keys.insert("alpha");
    switch (kind) {
    case StrategyKind::Replay:
        keys.insert({"augment", "perturb_fraction", "augment_dropout"});
        break;
    case StrategyKind::TMBNNM:
        keys.insert({"kappa", "bnnm_level"});
        break;
    case StrategyKind::EWC:
        keys.insert({"ewc_lambda", "fisher_samples"});
        break;
    default:
        break;
    }
    return keys;
}

} // namespace

StrategyKind parse_strategy_kind(const std::string& name) {
    for (const auto& [kind, label] : kKinds)
        if (squash(label) == squash(name))
            return kind;
    throw InputError("unknown strategy kind '" + name + "'");
}

std::string to_string(StrategyKind kind) {
    for (const auto& [k, label] : kKinds)
        if (k == kind)
            return label;
    return "?";
}

BnnmLevel parse_bnnm_level(const std::string& name) {
    if (name == "sentence")
        return BnnmLevel::Sentence;
    if (name == "token")
        return BnnmLevel::Token;
    throw InputError("bnnm_level must be 'sentence' or 'token', got '" + name + "'");
}

std::string to_string(BnnmLevel level) { return level == BnnmLevel::Sentence ? "sentence" : "token"; }

ReplayAugment parse_replay_augment(const std::string& name) {
    for (const auto& [aug, label] : kAugments)
        if (label == name)
            return aug;
    throw InputError("unknown replay augmentation '" + name + "'");
}

std::string to_string(ReplayAugment augment) {
    for (const auto& [a, label] : kAugments)
        if (a == augment)
            return label;
    return "?";
}

bool uses_replay(StrategyKind kind) {
    return kind == StrategyKind::Replay || kind == StrategyKind::AGEM || uses_mixup(kind);
}

bool uses_mixup(StrategyKind kind) { return kind == StrategyKind::TextMixup || kind == StrategyKind::TMBNNM; }

StrategyConfig StrategyConfig::defaults(StrategyKind kind, data::Mode mode) {
    StrategyConfig c;
    c.name = to_string(kind);
    c.kind = kind;
    c.kappa = mode == data::Mode::TaskOriented ? 0.4 : 0.6;
    return c;
}

void StrategyConfig::validate() const {
    auto fail = [&](const std::string& msg) { throw InputError("strategy '" + name + "': " + msg); };
    if (!(lr > 0.0))
        fail("lr must be positive");
    if (epochs < 1)
        fail("epochs must be >= 1");
    if (batch_size < 1)
        fail("batch_size must be >= 1");
    if (weight_decay < 0.0)
        fail("weight_decay must be >= 0");
    if (!(clip_norm > 0.0))
        fail("clip_norm must be positive");
    if (uses_replay(kind) && memory < 1)
        fail("memory must be >= 1");
    if (!(alpha > 0.0))
        fail("alpha must be positive");
    if (kappa < 0.0)
        fail("kappa must be >= 0");
    if (ewc_lambda < 0.0)
        fail("ewc_lambda must be >= 0");
    if (fisher_samples < 1)
        fail("fisher_samples must be >= 1");
    if (perturb_fraction < 0.0 || perturb_fraction > 1.0)
        fail("perturb_fraction must lie in [0, 1]");
    if (augment_dropout < 0.0 || augment_dropout >= 1.0)
        fail("augment_dropout must lie in [0, 1)");
}

StrategyConfig parse_strategy_config(const std::string& name, const std::map<std::string, std::string>& keys,
                                     data::Mode mode) {
    const auto kind_it = keys.find("kind");
    if (kind_it == keys.end())
        throw InputError("strategy '" + name + "': missing 'kind'");
    StrategyConfig c = StrategyConfig::defaults(parse_strategy_kind(kind_it->second), mode);
    c.name = name;
    const auto allowed = allowed_keys(c.kind);
    for (const auto& [key, value] : keys) {
        if (!allowed.count(key))
            throw InputError("strategy '" + name + "': key '" + key + "' does not apply to " + to_string(c.kind));
        if (key == "lr")
            c.lr = parse_number<double>(key, value);
        else if (key == "epochs")
            c.epochs = parse_number<int>(key, value);
        else if (key == "batch_size")
            c.batch_size = parse_number<std::size_t>(key, value);
        else if (key == "weight_decay")
            c.weight_decay = parse_number<double>(key, value);
        else if (key == "clip_norm")
            c.clip_norm = parse_number<double>(key, value);
        else if (key == "memory")
            c.memory = parse_number<std::size_t>(key, value);
        else if (key == "alpha")
            c.alpha = parse_number<double>(key, value);
        else if (key == "kappa")
            c.kappa = parse_number<double>(key, value);
        else if (key == "bnnm_level")
            c.bnnm_level = parse_bnnm_level(value);
        else if (key == "ewc_lambda")
            c.ewc_lambda = parse_number<double>(key, value);
        else if (key == "fisher_samples")
            c.fisher_samples = parse_number<std::size_t>(key, value);
        else if (key == "augment")
            c.augment = parse_replay_augment(value);
        else if (key == "perturb_fraction")
            c.perturb_fraction = parse_number<double>(key, value);
        else if (key == "augment_dropout")
            c.augment_dropout = parse_number<double>(key, value);
    }
    c.validate();
    return c;
}

} // namespace clgen::strategy
