#include "clgen/data/record.hpp"

#include "clgen/common/error.hpp"

#include <json.hpp>

#include <fstream>

namespace clgen::data {

using ordered_json = nlohmann::ordered_json;

Mode parse_mode(const std::string& name) {
    if (name == "task-oriented" || name == "task_oriented")
        return Mode::TaskOriented;
    if (name == "chitchat")
        return Mode::Chitchat;
    throw InputError("unknown mode: " + name);
}

std::string to_string(Mode mode) { return mode == Mode::TaskOriented ? "task-oriented" : "chitchat"; }

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos)
        return {};
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::string require_string(const ordered_json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end())
        throw InputError(where + ": missing field \"" + key + "\"");
    if (!it->is_string())
        throw InputError(where + ": field \"" + key + "\" must be a string");
    return it->get<std::string>();
}

void parse_act_object(const ordered_json& input, RawRecord& rec, const std::string& where) {
    rec.intent = require_string(input, "intent", where);
    const auto it = input.find("slots");
    if (it == input.end())
        return;
    if (it->is_object()) {
        for (const auto& [k, v] : it->items()) {
            if (!v.is_string())
                throw InputError(where + ": slot values must be strings");
            rec.slots.emplace_back(k, v.get<std::string>());
        }
    } else if (it->is_array()) {
        for (const auto& pair : *it) {
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string())
                throw InputError(where + ": slots must be [name, value] string pairs");
            rec.slots.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
        }
    } else {
        throw InputError(where + ": slots must be an object or a list of pairs");
    }
}

} // namespace

void parse_dialog_act(const std::string& text, std::string& intent, SlotList& slots) {
    const auto open = text.find('(');
    if (open == std::string::npos) {
        intent = trim(text);
    } else {
        const auto close = text.rfind(')');
        if (close == std::string::npos || close < open)
            throw InputError("dialog act: unbalanced parentheses in \"" + text + "\"");
        intent = trim(text.substr(0, open));
        const std::string body = text.substr(open + 1, close - open - 1);
        std::size_t start = 0;
        while (start <= body.size()) {
            const auto end = std::min(body.find(';', start), body.size());
            const std::string part = trim(body.substr(start, end - start));
            if (!part.empty()) {
                const auto eq = part.find('=');
                if (eq == std::string::npos)
                    throw InputError("dialog act: slot without '=' in \"" + text + "\"");
                slots.emplace_back(trim(part.substr(0, eq)), trim(part.substr(eq + 1)));
            }
            start = end + 1;
        }
    }
    if (intent.empty())
        throw InputError("dialog act: empty intent in \"" + text + "\"");
}

std::vector<RawRecord> load_jsonl(const std::filesystem::path& path, Mode mode) {
    std::ifstream is(path);
    if (!is)
        throw InputError("cannot open " + path.string());
    std::vector<RawRecord> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(is, line)) {
        ++number;
        if (trim(line).empty())
            continue;
        const std::string where = path.filename().string() + ":" + std::to_string(number);
        ordered_json obj;
        try {
            obj = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw InputError(where + ": malformed JSON (" + e.what() + ")");
        }
        if (!obj.is_object())
            throw InputError(where + ": expected a JSON object");
        RawRecord rec;
        rec.line = number;
        rec.domain = require_string(obj, "domain", where);
        if (mode == Mode::TaskOriented) {
            if (obj.contains("context") && !obj.contains("input"))
                throw InputError(where + ": chitchat record in task-oriented corpus");
            const auto input = obj.find("input");
            if (input == obj.end())
                throw InputError(where + ": missing field \"input\"");
            if (input->is_string())
                parse_dialog_act(input->get<std::string>(), rec.intent, rec.slots);
            else if (input->is_object())
                parse_act_object(*input, rec, where);
            else
                throw InputError(where + ": field \"input\" must be a string or object");
            rec.response = require_string(obj, "output", where);
        } else {
            if (obj.contains("input") && !obj.contains("context"))
                throw InputError(where + ": task-oriented record in chitchat corpus");
            const auto ctx = obj.find("context");
            if (ctx == obj.end() || !ctx->is_array())
                throw InputError(where + ": field \"context\" must be a list of strings");
            for (const auto& turn : *ctx) {
                if (!turn.is_string())
                    throw InputError(where + ": context turns must be strings");
                rec.context.push_back(turn.get<std::string>());
            }
            rec.response = require_string(obj, "response", where);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

} // namespace clgen::data
