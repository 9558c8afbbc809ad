#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>

namespace tsbli {

/// Propagation speed used for wavelengths, Doppler and delay offsets.
inline constexpr double kSpeedOfLight = 3.0e8;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// OFDM numerology and array geometry of one sounding frame.
///
/// Only primitive quantities are stored; the pilot spacings (N_IS * dT and
/// N_TC * df) are always derived.
struct SystemConfig {
  double carrier_frequency = 15e9;     // Hz
  double subcarrier_spacing = 60e3;    // Hz
  double symbol_duration = 16.67e-6;   // s, without CP
  double cp_duration = 1.17e-6;        // s
  std::size_t pilot_symbol_interval = 14;  // N_IS
  std::size_t comb_spacing = 4;            // N_TC
  std::size_t num_antennas = 128;
  std::size_t num_subcarriers = 128;   // pilot subcarriers
  std::size_t num_symbols = 10;        // pilot symbols per frame
  std::optional<double> antenna_spacing;  // m; half a wavelength when unset

  double symbol_period() const { return symbol_duration + cp_duration; }
  double pilot_period() const { return static_cast<double>(pilot_symbol_interval) * symbol_period(); }
  double pilot_subcarrier_spacing() const { return static_cast<double>(comb_spacing) * subcarrier_spacing; }
  double wavelength() const { return kSpeedOfLight / carrier_frequency; }
  double element_spacing() const { return antenna_spacing.value_or(0.5 * wavelength()); }
  double aperture() const { return static_cast<double>(num_antennas - 1) * element_spacing(); }
  /// Largest Doppler shift for a terminal moving at `speed` m/s.
  double max_doppler(double speed) const { return speed * carrier_frequency / kSpeedOfLight; }
  /// Time of the last pilot symbol, the origin of the prediction window.
  double prediction_origin() const { return static_cast<double>(num_symbols - 1) * pilot_period(); }

  void validate() const {
    if (num_antennas < 1 || num_subcarriers < 1 || num_symbols < 1 || pilot_symbol_interval < 1 ||
        comb_spacing < 1) {
      throw ConfigError("system counts must be >= 1");
    }
    if (!(carrier_frequency > 0) || !(subcarrier_spacing > 0) || !(symbol_duration > 0) || !(cp_duration > 0)) {
      throw ConfigError("system frequencies and durations must be > 0");
    }
    if (antenna_spacing && !(*antenna_spacing > 0)) throw ConfigError("antenna spacing must be > 0");
  }
};

}  // namespace tsbli
