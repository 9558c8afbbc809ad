#pragma once

#include "tsbli/channel_model.hpp"

#include <filesystem>
#include <string>

namespace tsbli {

/// JSON text with one object per path; gains are stored as [re, im] and
/// visibility as a 0/1 array. Round-trips bit-exactly (shortest decimal form).
std::string scene_to_json(const Scene& scene);
Scene scene_from_json(const std::string& text);

void save_scene(const Scene& scene, const std::filesystem::path& path);
Scene load_scene(const std::filesystem::path& path);

}  // namespace tsbli
