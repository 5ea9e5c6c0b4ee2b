#pragma once

#include "clgen/model/transformer.hpp"

#include <filesystem>

namespace clgen::model {

/// Binary archive: model config followed by every named parameter tensor.
void save_checkpoint(const std::filesystem::path& path, const TransformerLM& model);
TransformerLM load_checkpoint(const std::filesystem::path& path);

} // namespace clgen::model
