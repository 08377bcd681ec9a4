#include "starkshield/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "starkshield/emitter.hpp"
#include "starkshield/errors.hpp"
#include "starkshield/textio.hpp"

namespace starkshield {

namespace {

enum class Type { number, number_or_auto, count, flag, list, choice, text };

struct KeySpec {
  const char* key;
  Type type;
  const char* fallback;  // nullptr: no default
  std::vector<std::string_view> choices = {};
};

// Gate Rabi frequency in units of 1/tau; see the README for the choice.
constexpr const char* kDefaultGateRabi = "2";

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> keys = {
      {"run.experiment", Type::choice, nullptr,
       {"noise-validate", "ramsey", "gain-sweep", "spectroscopy", "qpt", "protection-table"}},
      {"run.unit", Type::choice, nullptr, {"tau", "gamma", "none"}},
      {"run.seed", Type::count, "1"},
      {"run.threads", Type::count, "1"},
      {"run.out", Type::text, "out"},

      {"noise.kind", Type::choice, nullptr, {"ou", "rtn", "static"}},
      {"noise.b", Type::number, nullptr},
      {"noise.tau", Type::number, "1"},
      {"noise.xi", Type::number, nullptr},
      {"noise.chi", Type::number, nullptr},
      {"noise.static_delta", Type::number, nullptr},
      {"noise.dt", Type::number_or_auto, "auto"},

      {"emitter.s", Type::number, nullptr},
      {"emitter.delta", Type::number, nullptr},
      {"emitter.omega", Type::number_or_auto, "auto"},
      {"emitter.gamma", Type::number, "0"},
      {"emitter.protection", Type::flag, "true"},

      {"probe.g", Type::number, nullptr},

      {"step.steps_per_drive_period", Type::count, "40"},
      {"step.max_step", Type::number, "inf"},
      {"step.max_phase", Type::number, "0.015"},
      {"step.refinement", Type::count, "1"},

      {"ramsey.horizon", Type::number, "33.3"},
      {"ramsey.n_trajectories", Type::count, "10000"},
      {"ramsey.n_sample_times", Type::count, "400"},
      {"ramsey.fit", Type::choice, "nonlinear", {"nonlinear", "linearized"}},

      {"sweep.s_values", Type::list, nullptr},
      {"sweep.delta_values", Type::list, nullptr},
      {"sweep.write_signals", Type::flag, "true"},

      {"spectroscopy.xi", Type::number, "4"},
      {"spectroscopy.delta_omegas", Type::list, nullptr},
      {"spectroscopy.chis", Type::list, nullptr},
      {"spectroscopy.evolve_time", Type::number, "15"},
      {"spectroscopy.n_trajectories", Type::count, "100"},

      {"qpt.gate", Type::choice, nullptr, {"x_pi", "hadamard", "both"}},
      {"qpt.rabi", Type::number, kDefaultGateRabi},
      {"qpt.area", Type::choice, "gate_exact", {"gate_exact", "omega_t"}},
      {"qpt.shots", Type::count, "10000"},
      {"qpt.exact", Type::flag, "false"},
      {"qpt.n_realizations", Type::count, "100"},
      {"qpt.xi", Type::number, "8"},
      {"qpt.chi", Type::number, "1"},
      {"qpt.s", Type::number, "80"},
      {"qpt.delta", Type::number, "4000"},
      {"qpt.omega", Type::number_or_auto, "auto"},

      {"noise_validate.b", Type::number, "19"},
      {"noise_validate.tau", Type::number, "1"},
      {"noise_validate.xi", Type::number, "1"},
      {"noise_validate.chi", Type::number, "1"},
      {"noise_validate.n_traces", Type::count, "10000"},
      {"noise_validate.horizon", Type::number, "33.3"},
      {"noise_validate.lags", Type::list, "0,0.25,0.5,1"},
      {"noise_validate.export_traces", Type::count, "1"},
      {"noise_validate.dt", Type::number, "0.005"},

      {"protection_table.s_values", Type::list, nullptr},
  };
  return keys;
}

const KeySpec* find_key(std::string_view key) {
  for (const auto& k : schema())
    if (key == k.key) return &k;
  return nullptr;
}

std::string_view section_of(std::string_view key) { return key.substr(0, key.find('.')); }

std::vector<std::string_view> sections_for(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::noise_validate: return {"run", "noise_validate"};
    case ExperimentKind::ramsey: return {"run", "noise", "emitter", "step", "ramsey"};
    case ExperimentKind::gain_sweep: return {"run", "noise", "step", "ramsey", "sweep"};
    case ExperimentKind::spectroscopy:
      return {"run", "emitter", "probe", "step", "spectroscopy"};
    case ExperimentKind::qpt: return {"run", "step", "qpt"};
    case ExperimentKind::protection_table: return {"run", "protection_table"};
  }
  return {};
}

bool applies(ExperimentKind kind, std::string_view key) {
  const auto secs = sections_for(kind);
  return std::find(secs.begin(), secs.end(), section_of(key)) != secs.end();
}

const char* fallback_for(ExperimentKind kind, const KeySpec& spec) {
  const std::string_view key = spec.key;
  if (key == "run.unit") return base_unit(kind);
  if (key == "emitter.gamma" && kind == ExperimentKind::spectroscopy) return "1";
  return spec.fallback;
}

[[noreturn]] void config_error(const std::string& msg) { fail(ErrorCode::config, msg); }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double number_from(const std::string& key, std::string_view text) {
  try {
    return parse_double(text);
  } catch (const Error&) {
    config_error("key '" + key + "': '" + std::string(text) + "' is not a number");
  }
}

std::uint64_t count_from(const std::string& key, std::string_view text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    config_error("key '" + key + "': '" + t + "' is not a non-negative integer");
  return v;
}

bool flag_from(const std::string& key, std::string_view text) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  config_error("key '" + key + "': '" + t + "' is not a boolean");
}

std::vector<double> list_from(const std::string& key, std::string_view text) {
  std::vector<double> out;
  std::string_view rest = text;
  while (true) {
    const auto comma = rest.find(',');
    const std::string item = trim(rest.substr(0, comma));
    if (item.empty()) config_error("key '" + key + "': empty list entry");
    out.push_back(number_from(key, item));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

std::string canonical(const KeySpec& spec, std::string_view raw) {
  const std::string key = spec.key;
  const std::string t = trim(raw);
  switch (spec.type) {
    case Type::number: return format_double(number_from(key, t));
    case Type::number_or_auto:
      return t == "auto" ? t : format_double(number_from(key, t));
    case Type::count: return std::to_string(count_from(key, t));
    case Type::flag: return flag_from(key, t) ? "true" : "false";
    case Type::list: {
      std::string joined;
      for (double v : list_from(key, t)) {
        if (!joined.empty()) joined += ',';
        joined += format_double(v);
      }
      return joined;
    }
    case Type::choice:
      if (std::find(spec.choices.begin(), spec.choices.end(), t) == spec.choices.end()) {
        std::string allowed;
        for (auto c : spec.choices) allowed += (allowed.empty() ? "" : ", ") + std::string(c);
        config_error("key '" + key + "': '" + t + "' is not one of " + allowed);
      }
      return t;
    case Type::text:
      if (t.empty()) config_error("key '" + key + "' must not be empty");
      return t;
  }
  return t;
}

using RawMap = std::map<std::string, std::string>;

void apply_override(RawMap& raw, const Override& o) {
  if (!find_key(o.key)) config_error("unknown key '" + o.key + "'");
  raw[o.key] = o.value;
}

void check_positive(const RunConfig& cfg, const std::string& key) {
  if (cfg.settings.count(key) && !(cfg.number(key) > 0.0))
    config_error("key '" + key + "' must be > 0");
}

void check_unit_scale(const RunConfig& cfg, const std::string& key, const char* unit) {
  if (cfg.settings.count(key) && cfg.number(key) != 1.0)
    config_error("key '" + key + "' must be 1: values are given in units of " +
                 std::string(unit) + ", got " + cfg.get(key));
}

RunConfig resolve(const RawMap& raw_in, std::string_view experiment) {
  RawMap raw = raw_in;
  if (!experiment.empty()) {
    auto it = raw.find("run.experiment");
    if (it != raw.end() && trim(it->second) != experiment)
      config_error("config file sets run.experiment = " + trim(it->second) +
                   " but the command requests " + std::string(experiment));
    raw["run.experiment"] = std::string(experiment);
  }
  if (!raw.count("run.experiment")) config_error("missing required key 'run.experiment'");

  RunConfig cfg;
  cfg.kind = parse_experiment_kind(trim(raw.at("run.experiment")));

  for (const auto& [key, value] : raw) {
    const KeySpec* spec = find_key(key);
    if (!spec) config_error("unknown key '" + key + "'");
    if (!applies(cfg.kind, key))
      config_error("key '" + key + "' does not apply to experiment '" +
                   std::string(to_string(cfg.kind)) + "'");
    cfg.settings[key] = canonical(*spec, value);
  }
  for (const auto& spec : schema()) {
    if (!applies(cfg.kind, spec.key) || cfg.settings.count(spec.key)) continue;
    if (const char* fb = fallback_for(cfg.kind, spec)) cfg.settings[spec.key] = canonical(spec, fb);
  }

  // Required keys, including those that depend on other settings.
  std::vector<std::string> required;
  const bool uses_noise = cfg.kind == ExperimentKind::ramsey || cfg.kind == ExperimentKind::gain_sweep;
  if (uses_noise) {
    required.push_back("noise.kind");
    if (cfg.settings.count("noise.kind")) {
      const auto& nk = cfg.get("noise.kind");
      if (nk == "ou") required.push_back("noise.b");
      if (nk == "rtn") required.insert(required.end(), {"noise.xi", "noise.chi"});
      if (nk == "static") required.push_back("noise.static_delta");
    }
  }
  switch (cfg.kind) {
    case ExperimentKind::ramsey:
    case ExperimentKind::spectroscopy:
      required.push_back("emitter.s");
      if (cfg.flag("emitter.protection")) required.push_back("emitter.delta");
      if (cfg.kind == ExperimentKind::spectroscopy)
        required.insert(required.end(),
                        {"probe.g", "spectroscopy.delta_omegas", "spectroscopy.chis"});
      break;
    case ExperimentKind::gain_sweep:
      required.insert(required.end(), {"sweep.s_values", "sweep.delta_values"});
      break;
    case ExperimentKind::qpt: required.push_back("qpt.gate"); break;
    case ExperimentKind::protection_table: required.push_back("protection_table.s_values"); break;
    case ExperimentKind::noise_validate: break;
  }
  std::string missing;
  for (const auto& k : required)
    if (!cfg.settings.count(k)) missing += (missing.empty() ? "" : ", ") + k;
  if (!missing.empty()) config_error("missing required key(s): " + missing);

  const std::string unit = base_unit(cfg.kind);
  if (cfg.get("run.unit") != unit)
    config_error("unit mismatch: experiment '" + std::string(to_string(cfg.kind)) +
                 "' is expressed in units of " + unit + ", config says " + cfg.get("run.unit"));
  if (uses_noise) check_unit_scale(cfg, "noise.tau", "tau");
  if (cfg.kind == ExperimentKind::noise_validate) check_unit_scale(cfg, "noise_validate.tau", "tau");
  if (cfg.kind == ExperimentKind::spectroscopy) check_unit_scale(cfg, "emitter.gamma", "1/gamma");

  for (const char* k : {"ramsey.horizon", "spectroscopy.evolve_time", "spectroscopy.xi",
                        "noise_validate.horizon", "noise_validate.dt", "qpt.rabi", "probe.g", "noise_validate.b",
                        "step.max_step", "step.max_phase"})
    check_positive(cfg, k);
  return cfg;
}

RawMap raw_from_ini(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    config_error(std::string("malformed config: ") + e.what());
  }
  RawMap raw;
  for (const auto& [section, body] : tree) {
    if (body.empty()) config_error("key '" + section + "' must be inside a [section]");
    for (const auto& [key, value] : body) raw[section + "." + key] = value.data();
  }
  return raw;
}

RawMap raw_from_config(const RunConfig& cfg) { return cfg.settings; }

double resolved_omega(double s, double delta) { return protection_ratio(s) * delta; }

}  // namespace

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::noise_validate: return "noise-validate";
    case ExperimentKind::ramsey: return "ramsey";
    case ExperimentKind::gain_sweep: return "gain-sweep";
    case ExperimentKind::spectroscopy: return "spectroscopy";
    case ExperimentKind::qpt: return "qpt";
    case ExperimentKind::protection_table: return "protection-table";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::noise_validate, ExperimentKind::ramsey, ExperimentKind::gain_sweep,
                 ExperimentKind::spectroscopy, ExperimentKind::qpt,
                 ExperimentKind::protection_table})
    if (name == to_string(k)) return k;
  config_error("unknown experiment '" + std::string(name) + "'");
}

const char* base_unit(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::spectroscopy: return "gamma";
    case ExperimentKind::protection_table: return "none";
    default: return "tau";
  }
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = settings.find(key);
  if (it == settings.end()) config_error("key '" + key + "' is not set");
  return it->second;
}

double RunConfig::number(const std::string& key) const { return number_from(key, get(key)); }
std::uint64_t RunConfig::count(const std::string& key) const { return count_from(key, get(key)); }
bool RunConfig::flag(const std::string& key) const { return flag_from(key, get(key)); }
std::vector<double> RunConfig::list(const std::string& key) const {
  return list_from(key, get(key));
}

Override parse_override(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) config_error("override '" + std::string(text) + "' lacks '='");
  Override o{trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
  if (o.key.find('.') == std::string::npos)
    config_error("override key '" + o.key + "' must be section.key");
  return o;
}

RunConfig parse_config(std::string_view ini_text, std::span<const Override> overrides,
                       std::string_view experiment) {
  RawMap raw = raw_from_ini(ini_text);
  for (const auto& o : overrides) apply_override(raw, o);
  return resolve(raw, experiment);
}

RunConfig load_config(const std::filesystem::path& path, std::span<const Override> overrides,
                      std::string_view experiment) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot read config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), overrides, experiment);
}

RunConfig with_overrides(const RunConfig& cfg, std::span<const Override> overrides) {
  RawMap raw = raw_from_config(cfg);
  for (const auto& o : overrides) apply_override(raw, o);
  return resolve(raw, {});
}

std::string echo_config(const RunConfig& cfg) {
  std::ostringstream out;
  std::string current;
  // Schema order keeps the echo stable and readable.
  for (const auto& spec : schema()) {
    const auto it = cfg.settings.find(spec.key);
    if (it == cfg.settings.end()) continue;
    const std::string_view sec = section_of(spec.key);
    if (sec != current) {
      if (!current.empty()) out << '\n';
      current = std::string(sec);
      out << '[' << current << "]\n";
    }
    const std::string_view name = std::string_view(spec.key).substr(sec.size() + 1);
    out << name << " = " << it->second << '\n';
    if (it->second == "auto") {
      if (name == "omega" && sec == "emitter" && cfg.settings.count("emitter.delta"))
        out << "; resolved: omega = "
            << format_double(resolved_omega(cfg.number("emitter.s"), cfg.number("emitter.delta")))
            << '\n';
      if (name == "omega" && sec == "qpt")
        out << "; resolved: omega = "
            << format_double(resolved_omega(cfg.number("qpt.s"), cfg.number("qpt.delta"))) << '\n';
    }
  }
  return out.str();
}

NoiseModel noise_model(const RunConfig& cfg) {
  NoiseModel m;
  const auto& kind = cfg.get("noise.kind");
  if (kind == "ou") {
    m.kind = NoiseKind::ou;
    m.ou = {cfg.number("noise.b"), cfg.number("noise.tau")};
  } else if (kind == "rtn") {
    m.kind = NoiseKind::rtn;
    m.rtn = {cfg.number("noise.xi"), cfg.number("noise.chi")};
  } else {
    m.kind = NoiseKind::static_value;
    m.static_delta = cfg.number("noise.static_delta");
  }
  m.validate();
  return m;
}

StepControl step_control(const RunConfig& cfg) {
  StepControl c;
  c.steps_per_drive_period = static_cast<int>(cfg.count("step.steps_per_drive_period"));
  c.max_step = cfg.number("step.max_step");
  c.max_phase = cfg.number("step.max_phase");
  c.refinement = static_cast<int>(cfg.count("step.refinement"));
  try {
    c.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }
  return c;
}

namespace {

EmitterConfig emitter_from(const RunConfig& cfg) {
  EmitterConfig em;
  em.s = cfg.number("emitter.s");
  if (em.s < 1.0) config_error("key 'emitter.s' must be >= 1");
  em.gamma = cfg.number("emitter.gamma");
  em.protection_on = cfg.flag("emitter.protection");
  if (cfg.settings.count("emitter.delta")) em.delta_drive = cfg.number("emitter.delta");
  if (em.protection_on && !(em.delta_drive > 0.0)) config_error("key 'emitter.delta' must be > 0");
  const auto& om = cfg.get("emitter.omega");
  if (om != "auto")
    em.omega_drive = cfg.number("emitter.omega");
  else if (em.delta_drive > 0.0)
    em.omega_drive = resolved_omega(em.s, em.delta_drive);
  return em;
}

std::optional<double> optional_dt(const RunConfig& cfg, const std::string& key) {
  if (!cfg.settings.count(key) || cfg.get(key) == "auto") return std::nullopt;
  return cfg.number(key);
}

}  // namespace

RamseyConfig ramsey_config(const RunConfig& cfg) {
  RamseyConfig r;
  if (cfg.kind == ExperimentKind::ramsey) r.emitter = emitter_from(cfg);
  r.noise = noise_model(cfg);
  r.horizon = cfg.number("ramsey.horizon");
  r.n_trajectories = cfg.count("ramsey.n_trajectories");
  r.n_sample_times = cfg.count("ramsey.n_sample_times");
  r.master_seed = cfg.master_seed();
  r.noise_dt = optional_dt(cfg, "noise.dt");
  r.step = step_control(cfg);
  r.fit_method = fit_method(cfg);
  r.threads = cfg.threads();
  return r;
}

FitMethod fit_method(const RunConfig& cfg) {
  return cfg.get("ramsey.fit") == "linearized" ? FitMethod::linearized : FitMethod::nonlinear;
}

SpectroscopyConfig spectroscopy_config(const RunConfig& cfg) {
  SpectroscopyConfig sc;
  sc.emitter = emitter_from(cfg);
  sc.emitter.probe = ProbeConfig{cfg.number("probe.g"), 0.0};
  sc.xi = cfg.number("spectroscopy.xi");
  sc.delta_omegas = cfg.list("spectroscopy.delta_omegas");
  sc.chis = cfg.list("spectroscopy.chis");
  sc.evolve_time = cfg.number("spectroscopy.evolve_time");
  sc.n_trajectories = cfg.count("spectroscopy.n_trajectories");
  sc.master_seed = cfg.master_seed();
  sc.step = step_control(cfg);
  sc.threads = cfg.threads();
  return sc;
}

std::vector<std::string> qpt_gate_names(const RunConfig& cfg) {
  const auto& g = cfg.get("qpt.gate");
  if (g == "both") return {"x_pi", "hadamard"};
  return {g};
}

std::vector<TomographyConfig> tomography_configs(const RunConfig& cfg) {
  std::vector<TomographyConfig> out;
  const double rabi = cfg.number("qpt.rabi");
  for (const auto& name : qpt_gate_names(cfg)) {
    GateSpec gate = name == "x_pi" ? GateSpec::x_pi(rabi) : GateSpec::hadamard(rabi);
    gate.area = cfg.get("qpt.area") == "omega_t" ? PulseArea::omega_t : PulseArea::gate_exact;
    TomographyConfig t = default_tomography_config(gate);
    t.rtn = {cfg.number("qpt.xi"), cfg.number("qpt.chi")};
    t.emitter.s = cfg.number("qpt.s");
    t.emitter.delta_drive = cfg.number("qpt.delta");
    t.emitter.omega_drive = cfg.get("qpt.omega") == "auto"
                                ? resolved_omega(t.emitter.s, t.emitter.delta_drive)
                                : cfg.number("qpt.omega");
    t.shots = cfg.count("qpt.shots");
    t.exact_expectations = cfg.flag("qpt.exact");
    t.n_realizations = cfg.count("qpt.n_realizations");
    t.master_seed = cfg.master_seed();
    t.step = step_control(cfg);
    t.threads = cfg.threads();
    out.push_back(t);
  }
  return out;
}

}  // namespace starkshield
