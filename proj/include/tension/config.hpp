#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tension/control.hpp"
#include "tension/daq.hpp"
#include "tension/elastomer.hpp"
#include "tension/optics.hpp"

namespace tension {

/// Force-domain standard deviation of the stationary output the default noise level reproduces.
inline constexpr double kTargetResolutionN = 9.888e-3;

/// Every model parameter the tools share. Unset optional fields are derived
/// (section properties from geometry, series stiffness from the elastomer).
struct ModelConfig {
  elastomer::ElastomerGeometry geometry;
  elastomer::Material material;
  std::optional<double> I1, I2, A5, A6;
  optics::PhotoReflectorModel reflector;
  daq::AdcConfig adc;
  double noise_sigma_v = 1.8e-5;
  double temperature_c = 25.0;
  control::TsaParams plant;
  std::optional<double> series_stiffness;
  control::PiGains gains = control::default_gains();

  elastomer::SectionProperties section() const;
  elastomer::ElastomerModel elastomer() const;
  optics::SensingChain chain() const;
  control::TsaParams resolved_plant() const;

  void validate() const;
};

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Plain `key = value` lines; '#' starts a comment. Keys under `run.` and
/// `derived.` are accepted and ignored so that echoed run headers can be fed back in.
/// Throws ParseError on unknown keys or unparsable values.
ModelConfig parse_config(std::istream& in);
ModelConfig load_config(const std::string& path);

/// Fully resolved configuration, defaults and derived values included.
/// Derived section properties are reported even when overridden.
ConfigEntries resolved_entries(const ModelConfig& cfg);

std::string to_config_text(const ConfigEntries& entries);

/// The `run.*` entries of a config file (key without the prefix -> raw value).
/// Tools use them as defaults for their own flags.
std::map<std::string, std::string> parse_run_entries(std::istream& in);

} // namespace tension
