#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "starkshield/config.hpp"
#include "starkshield/noise.hpp"

namespace starkshield {

struct ProtectionRow {
  double s = 0.0;
  double rhs = 0.0;        // (s - 1)/(s + 1)
  double ratio = 0.0;      // Omega / Delta
  double asymptote = 0.0;  // 1 / sqrt(s + 1)
  double residual = 0.0;   // |J0(2 sqrt2 ratio) - rhs|
};

std::vector<ProtectionRow> protection_table(std::span<const double> s_values);

/// Header `s,rhs,ratio,asymptote,residual`.
void write_protection_table_csv(std::span<const ProtectionRow> rows, std::ostream& out);

struct NoiseValidateConfig {
  OUParams ou{19.0, 1.0};
  RTNParams rtn{1.0, 1.0};
  std::size_t n_traces = 10000;
  double horizon = 33.3;
  double dt = 0.005;
  std::vector<double> lags{0.0, 0.25, 0.5, 1.0};
  std::uint64_t master_seed = 1;
  unsigned threads = 1;
};

struct NoiseValidation {
  std::vector<AutocorrelationPoint> ou_autocorrelation;
  std::vector<AutocorrelationPoint> rtn_autocorrelation;
  double ou_decay_rate = 0.0;
  double rtn_decay_rate = 0.0;
  double rtn_mean_jumps = 0.0;
  double rtn_jump_std_error = 0.0;
  double rtn_jump_variance = 0.0;
};

/// Ensemble statistics of both generators, streamed so traces are never held
/// all at once.
NoiseValidation noise_validate(const NoiseValidateConfig& cfg);

NoiseValidateConfig noise_validate_config(const RunConfig& cfg);

/// Header `process,quantity,lag,estimate,stderr,expected`.
void write_noise_validation_csv(const NoiseValidateConfig& cfg, const NoiseValidation& v,
                                std::ostream& out);

struct RunOutcome {
  std::vector<std::string> files;  // relative to the output directory
  std::string summary_json;
};

/// Runs the configured experiment and writes its CSVs into out_dir, followed
/// by manifest.json. On failure a PARTIAL marker naming the error is left next
/// to whatever was written, and the error is rethrown.
RunOutcome run_experiment(const RunConfig& cfg, const std::filesystem::path& out_dir);

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kPartialMarker = "PARTIAL";

}  // namespace starkshield
