// starkshield <experiment> --config <file> [--set key=value ...] --out <dir>
//             --seed <u64> --threads <n>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "starkshield/starkshield.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

int exit_code(ss_status s) {
  switch (s) {
    case SS_OK: return 0;
    case SS_ERR_CONFIG:
    case SS_ERR_INVALID_ARGUMENT:
    case SS_ERR_IO: return kExitConfig;
    default: return kExitNumerical;
  }
}

int report(ss_status s, const char* stage) {
  std::fprintf(stderr, "starkshield: %s failed (%s): %s\n", stage, ss_status_name(s),
               ss_last_error());
  return exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic three-level emitter simulator"};
  app.set_version_flag("--version", std::string(ss_version()));

  std::string experiment;
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool echo_only = false;

  app.add_option("experiment", experiment,
                 "noise-validate | ramsey | gain-sweep | spectroscopy | qpt | protection-table")
      ->required();
  app.add_option("--config,-c", config_path, "INI config file")->check(CLI::ExistingFile);
  app.add_option("--set", sets, "override section.key=value (repeatable)");
  app.add_option("--out,-o", out_dir, "output directory (default: run.out)");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--threads", threads, "worker threads, 0 = all cores");
  app.add_flag("--echo", echo_only, "print the resolved config and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  std::vector<std::string> overrides;
  for (const auto& kv : sets) {
    if (kv.find('=') == std::string::npos) {
      std::fprintf(stderr, "starkshield: --set expects key=value, got '%s'\n", kv.c_str());
      return kExitConfig;
    }
    overrides.push_back(kv);
  }
  if (seed) overrides.push_back("run.seed=" + std::to_string(*seed));
  if (threads) overrides.push_back("run.threads=" + std::to_string(*threads));
  if (!out_dir.empty()) overrides.push_back("run.out=" + out_dir);
  std::vector<const char*> raw;
  for (const auto& o : overrides) raw.push_back(o.c_str());

  ss_config* cfg = nullptr;
  const ss_status st =
      config_path.empty()
          ? ss_config_parse("", experiment.c_str(), raw.data(), raw.size(), &cfg)
          : ss_config_load(config_path.c_str(), experiment.c_str(), raw.data(), raw.size(), &cfg);
  if (st != SS_OK) return report(st, "config");

  struct Guard {
    ss_config* c;
    ~Guard() { ss_config_destroy(c); }
  } guard{cfg};

  if (echo_only) {
    size_t n = 0;
    ss_config_echo(cfg, nullptr, 0, &n);
    std::string text(n + 1, '\0');
    ss_config_echo(cfg, text.data(), text.size(), nullptr);
    std::fputs(text.c_str(), stdout);
    return 0;
  }

  size_t n = 0;
  ss_config_get(cfg, "run.out", nullptr, 0, &n);
  std::string out(n + 1, '\0');
  ss_config_get(cfg, "run.out", out.data(), out.size(), nullptr);
  out.resize(n);

  if (const ss_status rs = ss_run(cfg, out.c_str()); rs != SS_OK) return report(rs, "run");
  std::fprintf(stderr, "starkshield: %s finished, results in %s\n", ss_config_experiment(cfg),
               out.c_str());
  return 0;
}
