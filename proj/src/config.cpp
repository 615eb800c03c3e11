#include "tension/config.hpp"

#include <fstream>
#include <functional>
#include <istream>
#include <map>

#include "tension/errors.hpp"
#include "tension/text.hpp"

namespace tension {

elastomer::SectionProperties ModelConfig::section() const {
  auto sec = elastomer::SectionProperties::derive(geometry);
  if (I1 || I2 || A5 || A6) sec.source = elastomer::SectionSource::overridden;
  if (I1) sec.I1 = *I1;
  if (I2) sec.I2 = *I2;
  if (A5) sec.A5 = *A5;
  if (A6) sec.A6 = *A6;
  return sec;
}

elastomer::ElastomerModel ModelConfig::elastomer() const {
  return elastomer::ElastomerModel{geometry, section(), material};
}

optics::SensingChain ModelConfig::chain() const {
  return optics::SensingChain{elastomer(), reflector};
}

control::TsaParams ModelConfig::resolved_plant() const {
  control::TsaParams p = plant;
  p.series_stiffness = series_stiffness.value_or(elastomer().stiffness());
  return p;
}

void ModelConfig::validate() const {
  geometry.validate();
  material.validate();
  section().validate();
  reflector.validate();
  adc.validate();
  if (!(noise_sigma_v >= 0.0)) throw DomainError("noise.sigma_v must be >= 0");
  resolved_plant().validate();
}

namespace {

using Setter = std::function<void(ModelConfig&, double)>;

struct Key {
  const char* name;
  Setter set;
  std::function<double(const ModelConfig&)> get;
};

#define TENSION_KEY(name, field)                                   \
  Key {                                                            \
    name, [](ModelConfig& c, double v) { c.field = v; },           \
        [](const ModelConfig& c) { return static_cast<double>(c.field); } \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      TENSION_KEY("elastomer.l1", geometry.l1),
      TENSION_KEY("elastomer.l2", geometry.l2),
      TENSION_KEY("elastomer.l3", geometry.l3),
      TENSION_KEY("elastomer.l4", geometry.l4),
      TENSION_KEY("elastomer.t1", geometry.t1),
      TENSION_KEY("elastomer.t2", geometry.t2),
      TENSION_KEY("elastomer.t3", geometry.t3),
      TENSION_KEY("elastomer.a1", geometry.a1),
      TENSION_KEY("elastomer.a2", geometry.a2),
      TENSION_KEY("elastomer.b1", geometry.b1),
      TENSION_KEY("material.E", material.elastic_modulus),
      TENSION_KEY("material.G", material.shear_modulus),
      TENSION_KEY("material.ks", material.shear_coefficient),
      Key{"section.I1", [](ModelConfig& c, double v) { c.I1 = v; }, [](const ModelConfig& c) { return c.section().I1; }},
      Key{"section.I2", [](ModelConfig& c, double v) { c.I2 = v; }, [](const ModelConfig& c) { return c.section().I2; }},
      Key{"section.A5", [](ModelConfig& c, double v) { c.A5 = v; }, [](const ModelConfig& c) { return c.section().A5; }},
      Key{"section.A6", [](ModelConfig& c, double v) { c.A6 = v; }, [](const ModelConfig& c) { return c.section().A6; }},
      TENSION_KEY("optics.v_peak", reflector.v_peak),
      TENSION_KEY("optics.d_peak", reflector.d_peak),
      TENSION_KEY("optics.rest_gap", reflector.rest_gap),
      TENSION_KEY("optics.window_min", reflector.window_min),
      TENSION_KEY("optics.window_max", reflector.window_max),
      Key{"optics.gap_sign", [](ModelConfig& c, double v) { c.reflector.gap_sign = static_cast<int>(v); },
          [](const ModelConfig& c) { return static_cast<double>(c.reflector.gap_sign); }},
      TENSION_KEY("optics.temp_coeff", reflector.temp_coeff),
      TENSION_KEY("optics.t_ref", reflector.t_ref),
      Key{"adc.bits", [](ModelConfig& c, double v) { c.adc.bits = static_cast<int>(v); },
          [](const ModelConfig& c) { return static_cast<double>(c.adc.bits); }},
      TENSION_KEY("adc.v_ref", adc.v_ref),
      TENSION_KEY("noise.sigma_v", noise_sigma_v),
      TENSION_KEY("env.temperature_c", temperature_c),
      TENSION_KEY("plant.untwisted_length", plant.untwisted_length),
      TENSION_KEY("plant.string_radius", plant.string_radius),
      TENSION_KEY("plant.motor_tau", plant.motor_tau),
      TENSION_KEY("plant.max_speed", plant.max_speed),
      Key{"plant.series_stiffness", [](ModelConfig& c, double v) { c.series_stiffness = v; },
          [](const ModelConfig& c) { return c.resolved_plant().series_stiffness; }},
      TENSION_KEY("plant.slack_offset", plant.slack_offset),
      TENSION_KEY("pi.kp", gains.kp),
      TENSION_KEY("pi.ki", gains.ki),
      TENSION_KEY("pi.u_min", gains.u_min),
      TENSION_KEY("pi.u_max", gains.u_max),
      Key{"pi.anti_windup", [](ModelConfig& c, double v) { c.gains.anti_windup = v != 0.0; },
          [](const ModelConfig& c) { return c.gains.anti_windup ? 1.0 : 0.0; }},
  };
  return table;
}

#undef TENSION_KEY

bool is_integral_key(const std::string& name) {
  return name == "optics.gap_sign" || name == "adc.bits" || name == "pi.anti_windup";
}

} // namespace

ModelConfig parse_config(std::istream& in) {
  std::map<std::string, const Key*> index;
  for (const auto& k : keys()) index.emplace(k.name, &k);

  ModelConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = text::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected key = value");
    const std::string key(text::trim(view.substr(0, eq)));
    const auto value_text = text::trim(view.substr(eq + 1));
    if (key.starts_with("run.") || key.starts_with("derived.")) continue;
    const auto it = index.find(key);
    if (it == index.end()) throw ParseError(line_no, "unknown key '" + key + "'");
    const auto value = text::parse_double(value_text);
    if (!value) throw ParseError(line_no, "bad value for '" + key + "'");
    if (is_integral_key(key) && *value != static_cast<double>(static_cast<long long>(*value))) {
      throw ParseError(line_no, "'" + key + "' must be an integer");
    }
    it->second->set(cfg, *value);
  }
  return cfg;
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path + "'");
  return parse_config(in);
}

ConfigEntries resolved_entries(const ModelConfig& cfg) {
  ConfigEntries out;
  for (const auto& k : keys()) {
    const double v = k.get(cfg);
    out.emplace_back(k.name, is_integral_key(k.name) ? std::to_string(static_cast<long long>(v))
                                                     : text::format_double(v));
  }
  const auto derived = elastomer::SectionProperties::derive(cfg.geometry);
  out.emplace_back("derived.I1", text::format_double(derived.I1));
  out.emplace_back("derived.I2", text::format_double(derived.I2));
  out.emplace_back("derived.A5", text::format_double(derived.A5));
  out.emplace_back("derived.A6", text::format_double(derived.A6));
  return out;
}

std::string to_config_text(const ConfigEntries& entries) {
  std::string out;
  for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
  return out;
}

std::map<std::string, std::string> parse_run_entries(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) continue;
    const auto key = text::trim(view.substr(0, eq));
    if (key.starts_with("run.")) out[std::string(key.substr(4))] = std::string(text::trim(view.substr(eq + 1)));
  }
  return out;
}

} // namespace tension
