#include "tsbli/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace tsbli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end) throw ConfigError("expected a number, got '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end) throw ConfigError("expected a non-negative integer, got '" + s + "'");
  return v;
}

std::size_t to_size(const std::string& s) { return static_cast<std::size_t>(to_u64(s)); }

bool to_bool(const std::string& s) {
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ConfigError("expected a boolean, got '" + s + "'");
}

std::string fmt(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_same_v<T, std::string>) {
      out += xs[i];
    } else if constexpr (std::is_floating_point_v<T>) {
      out += fmt(static_cast<double>(xs[i]));
    } else {
      out += fmt(static_cast<std::uint64_t>(xs[i]));
    }
  }
  return out;
}

struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define TSBLI_DOUBLE(KEY, MEMBER) \
  Field{KEY, [](ExperimentConfig& c, const std::string& v) { c.MEMBER = to_double(v); }, \
        [](const ExperimentConfig& c) { return fmt(static_cast<double>(c.MEMBER)); }}
#define TSBLI_SIZE(KEY, MEMBER) \
  Field{KEY, [](ExperimentConfig& c, const std::string& v) { c.MEMBER = to_size(v); }, \
        [](const ExperimentConfig& c) { return fmt(static_cast<std::uint64_t>(c.MEMBER)); }}
#define TSBLI_BOOL(KEY, MEMBER) \
  Field{KEY, [](ExperimentConfig& c, const std::string& v) { c.MEMBER = to_bool(v); }, \
        [](const ExperimentConfig& c) { return fmt(static_cast<bool>(c.MEMBER)); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      TSBLI_DOUBLE("system.fc", system.carrier_frequency),
      TSBLI_DOUBLE("system.df", system.subcarrier_spacing),
      TSBLI_DOUBLE("system.T_sym", system.symbol_duration),
      TSBLI_DOUBLE("system.T_cp", system.cp_duration),
      TSBLI_SIZE("system.N_IS", system.pilot_symbol_interval),
      TSBLI_SIZE("system.N_TC", system.comb_spacing),
      TSBLI_SIZE("system.N_an", system.num_antennas),
      TSBLI_SIZE("system.N_sc", system.num_subcarriers),
      TSBLI_SIZE("system.N_sym", system.num_symbols),
      Field{"system.d",
            [](ExperimentConfig& c, const std::string& v) {
              if (v == "auto") {
                c.system.antenna_spacing.reset();
              } else {
                c.system.antenna_spacing = to_double(v);
              }
            },
            [](const ExperimentConfig& c) {
              return c.system.antenna_spacing ? fmt(*c.system.antenna_spacing) : std::string("auto");
            }},
      TSBLI_SIZE("scene.L", scene.num_paths),
      TSBLI_DOUBLE("scene.r_min", scene.min_distance),
      TSBLI_DOUBLE("scene.r_max", scene.max_distance),
      Field{"scene.v_kmh", [](ExperimentConfig& c, const std::string& v) { c.scene.speed = to_double(v) / 3.6; },
            [](const ExperimentConfig& c) { return fmt(c.scene.speed * 3.6); }},
      TSBLI_DOUBLE("scene.sns_fraction", scene.sns_fraction),
      TSBLI_DOUBLE("scene.power_decay", scene.power_decay),
      TSBLI_SIZE("grid.K_be", grids.beam),
      TSBLI_SIZE("grid.K_de", grids.delay),
      TSBLI_SIZE("grid.K_do", grids.doppler),
      TSBLI_SIZE("inference.T_M", inference.outer_iterations),
      TSBLI_SIZE("inference.T_E", inference.inner_iterations),
      TSBLI_DOUBLE("inference.damp", inference.damping),
      TSBLI_DOUBLE("inference.tol", inference.tolerance),
      TSBLI_SIZE("inference.warmup", inference.warmup),
      TSBLI_BOOL("inference.learn_perturbations", inference.learn_perturbations),
      TSBLI_SIZE("inference.m_sweeps", inference.perturbation_sweeps),
      TSBLI_BOOL("inference.learn_priors", inference.learn_priors),
      TSBLI_BOOL("inference.cap_variance", inference.cap_prior_variance),
      TSBLI_BOOL("inference.sequential_g", inference.estep.sequential_g),
      TSBLI_BOOL("inference.detect_sns", inference.estep.detect_sns),
      TSBLI_DOUBLE("inference.variance_floor", inference.estep.variance_floor),
      Field{"inference.gamma_rule",
            [](ExperimentConfig& c, const std::string& v) {
              if (v == "ratio") {
                c.inference.gamma_rule = GammaRule::kRatio;
              } else if (v == "logit") {
                c.inference.gamma_rule = GammaRule::kLogit;
              } else {
                throw ConfigError("gamma_rule must be ratio or logit");
              }
            },
            [](const ExperimentConfig& c) {
              return std::string(c.inference.gamma_rule == GammaRule::kRatio ? "ratio" : "logit");
            }},
      Field{"inference.expansion",
            [](ExperimentConfig& c, const std::string& v) {
              if (v == "previous") {
                c.inference.expansion = ExpansionPoint::kPrevious;
              } else if (v == "zero") {
                c.inference.expansion = ExpansionPoint::kZero;
              } else {
                throw ConfigError("expansion must be previous or zero");
              }
            },
            [](const ExperimentConfig& c) {
              return std::string(c.inference.expansion == ExpansionPoint::kPrevious ? "previous" : "zero");
            }},
      TSBLI_SIZE("baseline.omp_sparsity", omp.sparsity),
      TSBLI_SIZE("baseline.omp_beam_atoms", omp.beam_atoms),
      TSBLI_SIZE("baseline.omp_delay_atoms", omp.delay_atoms),
      TSBLI_DOUBLE("baseline.max_pole", omp.max_pole_modulus),
      TSBLI_DOUBLE("experiment.snr_db", snr_db),
      Field{"experiment.horizons",
            [](ExperimentConfig& c, const std::string& v) {
              c.horizons.clear();
              for (const auto& x : split_list(v)) c.horizons.push_back(to_size(x));
            },
            [](const ExperimentConfig& c) { return join(c.horizons); }},
      TSBLI_SIZE("experiment.trials", trials),
      Field{"experiment.seed", [](ExperimentConfig& c, const std::string& v) { c.seed = to_u64(v); },
            [](const ExperimentConfig& c) { return fmt(c.seed); }},
      Field{"experiment.methods", [](ExperimentConfig& c, const std::string& v) { c.methods = split_list(v); },
            [](const ExperimentConfig& c) { return join(c.methods); }},
      TSBLI_SIZE("experiment.workers", workers),
      TSBLI_BOOL("experiment.timing", timing),
      Field{"experiment.output", [](ExperimentConfig& c, const std::string& v) { c.output = v; },
            [](const ExperimentConfig& c) { return c.output; }},
      Field{"sweep.axis", [](ExperimentConfig& c, const std::string& v) { c.axis = parse_axis(v); },
            [](const ExperimentConfig& c) { return to_string(c.axis); }},
      Field{"sweep.values",
            [](ExperimentConfig& c, const std::string& v) {
              c.values.clear();
              for (const auto& x : split_list(v)) c.values.push_back(to_double(x));
            },
            [](const ExperimentConfig& c) { return join(c.values); }},
  };
  return table;
}

#undef TSBLI_DOUBLE
#undef TSBLI_SIZE
#undef TSBLI_BOOL

}  // namespace

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kSnr: return "snr";
    case SweepAxis::kHorizon: return "horizon";
    case SweepAxis::kCarrier: return "carrier";
    case SweepAxis::kIterations: return "iterations";
    case SweepAxis::kSns: return "sns";
  }
  return "snr";
}

SweepAxis parse_axis(const std::string& name) {
  for (auto a : {SweepAxis::kSnr, SweepAxis::kHorizon, SweepAxis::kCarrier, SweepAxis::kIterations, SweepAxis::kSns}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown sweep axis '" + name + "' (snr, horizon, carrier, iterations, sns)");
}

void ExperimentConfig::validate() const {
  system.validate();
  scene.validate();
  if (values.empty()) throw ConfigError("sweep values must be non-empty");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (horizons.empty() && axis != SweepAxis::kHorizon) throw ConfigError("horizons must be non-empty");
  for (auto h : horizons) {
    if (h < 1) throw ConfigError("horizons must be >= 1");
  }
  if (methods.empty()) throw ConfigError("at least one method is required");
  for (const auto& m : methods) {
    if (std::find(kAllMethods.begin(), kAllMethods.end(), m) == kAllMethods.end()) {
      throw ConfigError("unknown method '" + m + "'");
    }
  }
  if (inference.inner_iterations < 1) throw ConfigError("inference.T_E must be >= 1");
  if (!(inference.damping >= 0 && inference.damping <= 1)) throw ConfigError("inference.damp must lie in [0, 1]");
  if (omp.sparsity < 1) throw ConfigError("baseline.omp_sparsity must be >= 1");
}

ExperimentConfig desk_profile() {
  ExperimentConfig c;
  c.system.num_antennas = 32;
  c.system.num_subcarriers = 32;
  c.system.num_symbols = 10;
  c.scene.num_paths = 4;
  c.grids = {32, 16, 20};
  c.trials = 20;
  return c;
}

ExperimentConfig stretch_profile() {
  ExperimentConfig c;
  c.grids = GridCounts::defaults_for(c.system);
  c.omp.sparsity = 16;
  return c;
}

ExperimentConfig profile_by_name(const std::string& name) {
  if (name == "desk") return desk_profile();
  if (name == "stretch") return stretch_profile();
  throw ConfigError("unknown profile '" + name + "' (desk, stretch)");
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown configuration key '" + key + "'");
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    try {
      apply_setting(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return parse_config(in, std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string format_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  return out;
}

}  // namespace tsbli
