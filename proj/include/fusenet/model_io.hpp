#pragma once
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fusenet/train.hpp"

namespace fusenet {

/// Model file schema: JSON with the architecture in clear text and the
/// per-layer weights/biases (and optional Fisher values) as base64-encoded
/// little-endian float32 arrays in row-major order. Computation stays in
/// double; storage is float32.
inline constexpr int kModelFormatVersion = 1;

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);

/// Writes via a temporary file + rename, so a failed save leaves no
/// partial model behind.
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

} // namespace fusenet
