#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace clgen::data {

enum class Mode { TaskOriented, Chitchat };

Mode parse_mode(const std::string& name);
std::string to_string(Mode mode);

using SlotList = std::vector<std::pair<std::string, std::string>>;

/// One parsed JSONL line. Task-oriented records fill intent/slots/response;
/// chitchat records fill context/response.
struct RawRecord {
    std::size_t line = 0;
    std::string domain;
    std::string intent;
    SlotList slots;
    std::vector<std::string> context;
    std::string response;
};

/// Task-oriented lines: {"domain", "input", "output"} where input is either
/// an object {"intent": ..., "slots": {...} or [[name, value], ...]} or a
/// string "INTENT(name=value;...)". Chitchat lines: {"domain", "context":
/// [...], "response"}.
std::vector<RawRecord> load_jsonl(const std::filesystem::path& path, Mode mode);

/// Parses the compact "INTENT(name=value;...)" form.
void parse_dialog_act(const std::string& text, std::string& intent, SlotList& slots);

} // namespace clgen::data
