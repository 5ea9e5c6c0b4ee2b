#include "clgen/cli/config.hpp"

#include "clgen/common/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace clgen::cli {

namespace pt = boost::property_tree;

namespace {

class Section {
public:
    Section(std::string file, std::string name, const pt::ptree& tree) : file_(std::move(file)), name_(std::move(name)) {
        for (const auto& [key, value] : tree) {
            if (!value.empty())
                fail(key, "nested values are not supported");
            keys_[key] = value.data();
        }
    }

    /// Rejects any key not in `allowed`.
    void restrict(const std::set<std::string>& allowed) const {
        for (const auto& [key, _] : keys_)
            if (!allowed.count(key))
                fail(key, "unknown key");
    }

    bool has(const std::string& key) const { return keys_.count(key) != 0; }

    std::string text(const std::string& key, std::string fallback) const {
        const auto it = keys_.find(key);
        return it == keys_.end() ? fallback : it->second;
    }

    template <typename T>
    T number(const std::string& key, T fallback) const {
        const auto it = keys_.find(key);
        if (it == keys_.end())
            return fallback;
        return parse<T>(key, it->second);
    }

    bool flag(const std::string& key, bool fallback) const {
        const std::string v = text(key, fallback ? "true" : "false");
        if (v == "true" || v == "yes" || v == "1")
            return true;
        if (v == "false" || v == "no" || v == "0")
            return false;
        fail(key, "expected a boolean, got '" + v + "'");
    }

    template <typename T>
    std::vector<T> list(const std::string& key, std::vector<T> fallback) const {
        const auto it = keys_.find(key);
        if (it == keys_.end())
            return fallback;
        std::vector<T> out;
        std::stringstream ss(it->second);
        for (std::string item; std::getline(ss, item, ',');) {
            const auto b = item.find_first_not_of(" \t");
            const auto e = item.find_last_not_of(" \t");
            if (b == std::string::npos)
                fail(key, "empty list element");
            out.push_back(parse<T>(key, item.substr(b, e - b + 1)));
        }
        return out;
    }

    const std::map<std::string, std::string>& keys() const { return keys_; }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        throw InputError(file_ + ": [" + name_ + "] " + key + ": " + msg);
    }

private:
    template <typename T>
    T parse(const std::string& key, const std::string& text) const {
        T value{};
        const char* end = text.data() + text.size();
        const auto [ptr, ec] = std::from_chars(text.data(), end, value);
        if (ec != std::errc() || ptr != end)
            fail(key, "cannot parse '" + text + "'");
        return value;
    }

    std::string file_;
    std::string name_;
    std::map<std::string, std::string> keys_;
};

} // namespace

VocabScope parse_vocab_scope(const std::string& name) {
    if (name == "first_domain")
        return VocabScope::FirstDomain;
    if (name == "all_domains")
        return VocabScope::AllDomains;
    throw InputError("vocab_scope must be 'first_domain' or 'all_domains', got '" + name + "'");
}

std::string to_string(VocabScope scope) { return scope == VocabScope::FirstDomain ? "first_domain" : "all_domains"; }

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

RunConfig RunConfig::parse(const std::string& text, const std::filesystem::path& source) {
    const std::string file = source.string();
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw InputError(file + ":" + std::to_string(e.line()) + ": " + e.message());
    }

    RunConfig c;
    c.source = source;
    const std::filesystem::path base = source.has_parent_path() ? source.parent_path() : ".";
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path path(p);
        return (path.is_absolute() ? path : base / path).lexically_normal();
    };

    std::map<std::string, const pt::ptree*> sections;
    for (const auto& [name, sub] : tree) {
        if (sub.empty() && !sub.data().empty())
            throw InputError(file + ": key '" + name + "' outside of a section");
        sections[name] = &sub;
    }
    const pt::ptree empty;
    auto section = [&](const std::string& name) {
        const auto it = sections.find(name);
        return Section(file, name, it == sections.end() ? empty : *it->second);
    };

    for (const auto& [name, _] : sections)
        if (name != "run" && name != "model" && name != "generation" && name != "diagnostics" &&
            name.rfind("strategy.", 0) != 0)
            throw InputError(file + ": unknown section [" + name + "]");

    const Section run = section("run");
    run.restrict({"output", "mode", "data", "fixtures", "fixture_seed", "fixture_train", "fixture_test", "seeds",
                  "permutations", "vocab_scope", "min_count", "t_turns", "max_len"});
    if (!run.has("output"))
        run.fail("output", "required");
    c.output = resolve(run.text("output", ""));
    c.mode = data::parse_mode(run.text("mode", "task-oriented"));
    c.fixtures = run.flag("fixtures", false);
    if (run.has("data"))
        c.data_dir = resolve(run.text("data", ""));
    if (c.fixtures == run.has("data"))
        run.fail("data", "set exactly one of 'data' and 'fixtures = true'");
    c.fixture.seed = run.number<std::uint64_t>("fixture_seed", c.fixture.seed);
    c.fixture.train_per_domain = run.number<int>("fixture_train", c.fixture.train_per_domain);
    c.fixture.test_per_domain = run.number<int>("fixture_test", c.fixture.test_per_domain);
    c.seeds = run.list<std::uint64_t>("seeds", c.seeds);
    c.permutations = run.number<int>("permutations", c.permutations);
    c.vocab_scope = parse_vocab_scope(run.text("vocab_scope", "first_domain"));
    c.min_count = run.number<int>("min_count", c.min_count);
    c.format = data::FormatOptions::defaults(c.mode);
    c.format.t_turns = run.number<int>("t_turns", c.format.t_turns);
    c.format.max_len = run.number<int>("max_len", c.format.max_len);

    const Section model = section("model");
    model.restrict({"num_layers", "num_heads", "hidden", "max_seq_len", "dropout"});
    c.model.num_layers = model.number<int>("num_layers", c.model.num_layers);
    c.model.num_heads = model.number<int>("num_heads", c.model.num_heads);
    c.model.hidden = model.number<int>("hidden", c.model.hidden);
    c.model.max_seq_len = model.number<int>("max_seq_len", std::max(c.model.max_seq_len, c.format.max_len));
    c.model.dropout = model.number<double>("dropout", c.model.dropout);

    const Section gen = section("generation");
    gen.restrict({"top_p", "candidates", "max_new_tokens", "batch_size"});
    c.generation = eval::GenerationConfig::defaults(c.mode);
    c.generation.top_p = gen.number<double>("top_p", c.generation.top_p);
    c.generation.candidates = gen.number<int>("candidates", c.generation.candidates);
    c.generation.max_new_tokens = gen.number<int>("max_new_tokens", c.generation.max_new_tokens);
    c.generation.batch_size = gen.number<std::size_t>("batch_size", c.generation.batch_size);

    const Section diag = section("diagnostics");
    diag.restrict({"rank_every", "rank_rel_tol"});
    c.rank_every = diag.number<int>("rank_every", c.rank_every);
    c.rank_rel_tol = diag.number<double>("rank_rel_tol", c.rank_rel_tol);

    for (const auto& [name, sub] : sections) {
        if (name.rfind("strategy.", 0) != 0)
            continue;
        const std::string label = name.substr(9);
        const Section s = section(name);
        try {
            c.strategies.push_back(strategy::parse_strategy_config(label, s.keys(), c.mode));
        } catch (const InputError& e) {
            throw InputError(file + ": [" + name + "] " + e.what());
        }
    }
    c.validate();
    return c;
}

void RunConfig::validate() const {
    const std::string file = source.string();
    auto fail = [&](const std::string& msg) { throw InputError(file + ": " + msg); };
    if (strategies.empty())
        fail("at least one [strategy.<name>] section is required");
    std::set<std::string> names;
    for (const auto& s : strategies) {
        if (s.name.empty() || s.name.find_first_of("/\\ ") != std::string::npos)
            fail("strategy name '" + s.name + "' must be non-empty without spaces or slashes");
        if (!names.insert(s.name).second)
            fail("duplicate strategy '" + s.name + "'");
        s.validate();
    }
    if (seeds.empty())
        fail("seeds must not be empty");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
        fail("seeds must be distinct");
    if (permutations < 1)
        fail("permutations must be >= 1");
    if (min_count < 1)
        fail("min_count must be >= 1");
    if (format.t_turns < 1 || format.max_len < 4)
        fail("t_turns must be >= 1 and max_len >= 4");
    if (fixtures && (fixture.train_per_domain < 1 || fixture.test_per_domain < 1))
        fail("fixture sizes must be positive");
    if (rank_every < 0)
        fail("rank_every must be >= 0");
    if (!(rank_rel_tol > 0.0 && rank_rel_tol < 1.0))
        fail("rank_rel_tol must lie in (0, 1)");
    if (model.max_seq_len < format.max_len)
        fail("model max_seq_len must be >= max_len");
    model::ModelConfig probe = model;
    probe.vocab_size = data::Tokenizer::kNumSpecial + 1;
    try {
        probe.validate();
        generation.validate();
    } catch (const InputError& e) {
        fail(e.what());
    }
}

} // namespace clgen::cli
