#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "jslight/mlp.hpp"

namespace jslight {

inline constexpr int kModelFormatVersion = 1;

// Model file: {version, vocab_version, category_encoding, layer_dims,
// layers: [{weights (row-major, in x out), bias}], threshold_default,
// vocabulary}. Doubles are written in shortest round-trip form, so loading
// reproduces the in-memory values exactly.
std::string model_to_json(const ModelParameters& model);

// Throws jslight::Error on malformed content, a foreign category encoding,
// or shapes that do not chain.
ModelParameters model_from_json(std::string_view text);

void save_model(const ModelParameters& model, const std::filesystem::path& path);
ModelParameters load_model(const std::filesystem::path& path);

}  // namespace jslight
