#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "starkshield/experiments.hpp"
#include "starkshield/noise.hpp"
#include "starkshield/tomography.hpp"

namespace starkshield {

enum class ExperimentKind {
  noise_validate,
  ramsey,
  gain_sweep,
  spectroscopy,
  qpt,
  protection_table,
};

const char* to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view name);

/// Time unit every value of an experiment is measured in: tau for the
/// bath-correlation experiments, 1/gamma for spectroscopy.
const char* base_unit(ExperimentKind kind);

/// Fully resolved run description. Settings hold every key that applies to the
/// experiment, defaults filled in and numbers in canonical text form, so two
/// configs compare equal exactly when they describe the same run.
struct RunConfig {
  ExperimentKind kind = ExperimentKind::ramsey;
  std::map<std::string, std::string> settings;  // "section.key" -> value

  const std::string& get(const std::string& key) const;
  double number(const std::string& key) const;
  std::uint64_t count(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> list(const std::string& key) const;

  std::uint64_t master_seed() const { return count("run.seed"); }
  unsigned threads() const { return static_cast<unsigned>(count("run.threads")); }
  std::filesystem::path output_dir() const { return get("run.out"); }

  bool operator==(const RunConfig&) const = default;
};

struct Override {
  std::string key;
  std::string value;
};

/// Parses `section.key=value`.
Override parse_override(std::string_view text);

/// Builds a RunConfig from INI text plus overrides (applied in order).
/// `experiment` may be empty when the text sets run.experiment.
RunConfig parse_config(std::string_view ini_text, std::span<const Override> overrides = {},
                       std::string_view experiment = {});
RunConfig load_config(const std::filesystem::path& path,
                      std::span<const Override> overrides = {},
                      std::string_view experiment = {});

/// Re-applies overrides to an already resolved config.
RunConfig with_overrides(const RunConfig& cfg, std::span<const Override> overrides);

/// INI text that parses back to the same RunConfig.
std::string echo_config(const RunConfig& cfg);

NoiseModel noise_model(const RunConfig& cfg);
StepControl step_control(const RunConfig& cfg);
RamseyConfig ramsey_config(const RunConfig& cfg);
FitMethod fit_method(const RunConfig& cfg);
SpectroscopyConfig spectroscopy_config(const RunConfig& cfg);
std::vector<TomographyConfig> tomography_configs(const RunConfig& cfg);
std::vector<std::string> qpt_gate_names(const RunConfig& cfg);

}  // namespace starkshield
