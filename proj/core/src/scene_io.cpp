#include "tsbli/scene_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace tsbli {

using nlohmann::json;

std::string scene_to_json(const Scene& scene) {
  json paths = json::array();
  for (const auto& p : scene.paths) {
    paths.push_back({{"gain", {p.gain.real(), p.gain.imag()}},
                     {"cosine", p.cosine},
                     {"distance", p.distance},
                     {"slope", p.slope},
                     {"delay", p.delay},
                     {"doppler", p.doppler},
                     {"visibility", p.visibility}});
  }
  json doc = {{"seed", scene.seed}, {"num_paths", scene.paths.size()}, {"paths", paths}};
  return doc.dump(2);
}

Scene scene_from_json(const std::string& text) {
  Scene scene;
  try {
    const json doc = json::parse(text);
    scene.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& jp : doc.at("paths")) {
      PathParams p;
      const auto& g = jp.at("gain");
      p.gain = {g.at(0).get<double>(), g.at(1).get<double>()};
      p.cosine = jp.at("cosine").get<double>();
      p.distance = jp.at("distance").get<double>();
      p.slope = jp.at("slope").get<double>();
      p.delay = jp.at("delay").get<double>();
      p.doppler = jp.at("doppler").get<double>();
      p.visibility = jp.at("visibility").get<std::vector<std::uint8_t>>();
      scene.paths.push_back(std::move(p));
    }
    if (doc.contains("num_paths") && doc.at("num_paths").get<std::size_t>() != scene.paths.size()) {
      throw ConfigError("scene num_paths does not match the path list");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed scene JSON: ") + e.what());
  }
  return scene;
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << scene_to_json(scene) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return scene_from_json(ss.str());
}

}  // namespace tsbli
