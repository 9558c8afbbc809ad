// Experiment driver: runs Monte-Carlo sweeps of TS-BLI and the baselines and
// writes the metrics CSV, or dumps the intermediates of one E-step.

#include "tsbli/experiment.hpp"
#include "tsbli/scene_io.hpp"
#include "tsbli/tensor_io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace {

std::string file_label(std::string_view label) {
  std::string s(label);
  for (auto& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  }
  return s;
}

int run_trace(const tsbli::ExperimentConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream index(dir / "index.csv");
  index << "line,label,shape,fro_norm,file\n";
  std::set<std::pair<int, std::string>> seen;
  auto sink = [&](int line, std::string_view label, const tsbli::Tensor& value) {
    if (!seen.emplace(line, std::string(label)).second) return;
    char name[96];
    std::snprintf(name, sizeof name, "line%02d_%s.tsr", line, file_label(label).c_str());
    tsbli::save_tensor(dir / name, value);
    index << line << ',' << label << ',' << '"' << tsbli::shape_to_string(value.shape()) << '"' << ','
          << tsbli::fro_norm(value) << ',' << name << '\n';
  };
  tsbli::ExperimentConfig one = cfg;
  one.methods = {"tsbli"};
  const auto seed = tsbli::trial_seed(cfg.seed, 0);
  const auto outcome = tsbli::run_trial(one, cfg.values.front(), seed, 0, sink);
  tsbli::save_scene(outcome.scene, dir / "scene.json");
  std::ofstream diag(dir / "diagnostics.csv");
  tsbli::write_diagnostics_csv(diag, outcome.tsbli->diagnostics);
  std::cout << "trace written to " << dir.string() << " (" << seen.size() << " intermediates)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TS-BLI channel prediction experiments"};
  std::string config_path;
  std::string out_path;
  std::string profile = "desk";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::vector<std::string> methods;
  std::vector<std::string> settings;
  std::string trace_dir;
  bool stretch = false;
  bool print_config = false;

  app.add_option("-c,--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("-o,--out", out_path, "metrics CSV path (default: experiment.output or stdout)");
  app.add_option("-p,--profile", profile, "base profile")->check(CLI::IsMember({"desk", "stretch"}));
  app.add_option("-s,--seed", seed, "base seed override");
  app.add_option("-n,--trials", trials, "trial count override");
  app.add_option("-m,--methods", methods, "methods to run (tsbli, stale, omp_prony)")->delimiter(',');
  app.add_option("--set", settings, "extra key=value settings applied after the config file");
  app.add_option("--trace", trace_dir, "dump every E-step intermediate of one trial into this directory");
  app.add_flag("--stretch", stretch, "use the full-size stretch profile");
  app.add_flag("--print-config", print_config, "print the resolved configuration and exit");
  CLI11_PARSE(app, argc, argv);

  try {
    tsbli::ExperimentConfig cfg = tsbli::profile_by_name(stretch ? "stretch" : profile);
    if (!config_path.empty()) cfg = tsbli::load_config(config_path, cfg);
    for (const auto& kv : settings) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw tsbli::ConfigError("--set expects key=value, got '" + kv + "'");
      tsbli::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) cfg.seed = *seed;
    if (trials) cfg.trials = *trials;
    if (!methods.empty()) cfg.methods = methods;
    if (!out_path.empty()) cfg.output = out_path;
    cfg.validate();

    if (print_config) {
      std::cout << tsbli::format_config(cfg);
      return 0;
    }
    if (!trace_dir.empty()) return run_trace(cfg, trace_dir);

    const auto result = tsbli::run_sweep(cfg);
    if (cfg.output.empty() || cfg.output == "-") {
      tsbli::write_csv(std::cout, result);
    } else {
      tsbli::write_csv(fs::path(cfg.output), result);
    }
    std::size_t failed = 0;
    for (const auto& r : result.trials) failed += r.kind == "failed";
    for (const auto& r : result.summary) {
      if (!r.nmse_db) continue;
      std::cerr << tsbli::to_string(cfg.axis) << '=' << r.value << ' ' << r.method << " n_cp=" << r.horizon
                << " mean NMSE " << *r.nmse_db << " dB\n";
    }
    if (failed) std::cerr << failed << " failed trial rows\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
