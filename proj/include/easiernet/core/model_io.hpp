#pragma once

#include <string>

#include "easiernet/core/ensemble.hpp"

namespace easiernet {

inline constexpr int kModelFormatVersion = 1;

/// JSON document holding config, penalties, preprocessing and every member's
/// tensors (explicit dimensions, row-major, shortest round-trip decimals).
std::string serialize_model(const EnsembleModel& model);
EnsembleModel deserialize_model(const std::string& text);

void save_model(const EnsembleModel& model, const std::string& path);
EnsembleModel load_model(const std::string& path);

}  // namespace easiernet
