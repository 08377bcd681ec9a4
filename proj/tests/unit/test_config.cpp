#include <doctest.h>

#include <filesystem>
#include <string>

#include "starkshield/config.hpp"
#include "starkshield/errors.hpp"

using namespace starkshield;

namespace {

const std::filesystem::path kConfigs = std::filesystem::path(STARKSHIELD_SOURCE_DIR) / "configs";

const char* kMinimalRamsey = R"(
[run]
experiment = ramsey

[noise]
kind = ou
b = 19

[emitter]
s = 40
delta = 4000
)";

// Message of the config error raised by parsing, or "" if none.
std::string config_error_of(const std::string& text, std::initializer_list<Override> ov = {},
                            std::string_view experiment = {}) {
  try {
    parse_config(text, {ov.begin(), ov.size()}, experiment);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config);
    return e.what();
  }
  return {};
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("experiment names") {
  for (auto k : {ExperimentKind::noise_validate, ExperimentKind::ramsey, ExperimentKind::gain_sweep,
                 ExperimentKind::spectroscopy, ExperimentKind::qpt, ExperimentKind::protection_table})
    CHECK(parse_experiment_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_experiment_kind("fid"), Error);
  CHECK(std::string(base_unit(ExperimentKind::spectroscopy)) == "gamma");
  CHECK(std::string(base_unit(ExperimentKind::qpt)) == "tau");
}

TEST_CASE("minimal ramsey config fills in defaults") {
  const auto cfg = parse_config(kMinimalRamsey);
  CHECK(cfg.kind == ExperimentKind::ramsey);
  CHECK(cfg.get("emitter.omega") == "auto");
  CHECK(cfg.get("run.unit") == "tau");
  CHECK(cfg.master_seed() == 1);
  const auto rc = ramsey_config(cfg);
  CHECK(rc.emitter.protection_on);
  CHECK(rc.emitter.omega_drive == doctest::Approx(protection_ratio(40.0) * 4000.0).epsilon(1e-14));
  CHECK(rc.noise.kind == NoiseKind::ou);
  CHECK(rc.noise.ou.b == 19.0);
  CHECK(rc.n_trajectories == 10000);
  CHECK(rc.horizon == doctest::Approx(33.3));
  CHECK(rc.fit_method == FitMethod::nonlinear);
  CHECK(contains(echo_config(cfg), "; resolved: omega = "));
}

TEST_CASE("overrides") {
  const Override o = parse_override("ramsey.n_trajectories = 250");
  CHECK(o.key == "ramsey.n_trajectories");
  CHECK(o.value == "250");
  CHECK_THROWS_AS(parse_override("no_equals_sign"), Error);

  const auto cfg = parse_config(kMinimalRamsey, {&o, 1});
  CHECK(ramsey_config(cfg).n_trajectories == 250);
  CHECK(contains(echo_config(cfg), "n_trajectories = 250"));

  const Override again{"emitter.omega", "600"};
  const auto fixed = with_overrides(cfg, {&again, 1});
  CHECK(ramsey_config(fixed).emitter.omega_drive == 600.0);
  CHECK(ramsey_config(fixed).n_trajectories == 250);

  const Override later[] = {{"run.seed", "5"}, {"run.seed", "9"}};
  CHECK(parse_config(kMinimalRamsey, later).master_seed() == 9);

  SUBCASE("overrides may supply required keys") {
    const Override req[] = {{"noise.kind", "static"}, {"noise.static_delta", "0.5"},
                            {"emitter.s", "10"}, {"emitter.protection", "off"}};
    const auto c = parse_config("", req, "ramsey");
    CHECK(noise_model(c).kind == NoiseKind::static_value);
    CHECK_FALSE(ramsey_config(c).emitter.protection_on);
  }
}

TEST_CASE("spectroscopy config from the example file") {
  const auto cfg = load_config(kConfigs / "spectroscopy_delta800.ini");
  CHECK(cfg.kind == ExperimentKind::spectroscopy);
  const auto sc = spectroscopy_config(cfg);
  CHECK(sc.xi == 4.0);
  CHECK(sc.emitter.probe->g == doctest::Approx(0.1));
  CHECK(sc.emitter.s == 40.0);
  CHECK(sc.emitter.delta_drive == 800.0);
  CHECK(sc.emitter.gamma == 1.0);
  CHECK(sc.evolve_time == 15.0);
  CHECK(sc.n_trajectories == 100);
  CHECK(sc.chis.size() == 7);
  CHECK(sc.delta_omegas.size() == 17);
  CHECK(parse_config(echo_config(cfg)) == cfg);
}

TEST_CASE("echo round trip for every example config") {
  for (const auto& entry : std::filesystem::directory_iterator(kConfigs)) {
    CAPTURE(entry.path().string());
    const auto cfg = load_config(entry.path());
    const auto text = echo_config(cfg);
    CHECK(parse_config(text) == cfg);
    CHECK(echo_config(parse_config(text)) == text);
  }
}

TEST_CASE("qpt configs") {
  const auto cfg = load_config(kConfigs / "qpt.ini");
  CHECK(qpt_gate_names(cfg) == std::vector<std::string>{"x_pi", "hadamard"});
  const auto tc = tomography_configs(cfg);
  REQUIRE(tc.size() == 2);
  CHECK(tc[0].gate.rabi == 2.0);
  CHECK(tc[1].gate.rotations.size() == 2);
  CHECK(tc[0].rtn.xi == 8.0);
  CHECK(tc[0].emitter.omega_drive == doctest::Approx(protection_ratio(80.0) * 4000.0));
}

TEST_CASE("config errors") {
  const std::string base = kMinimalRamsey;
  CHECK(contains(config_error_of("[run]\nexperiment = ramsey\n[noise]\nkind = ou\nb = 19\nbogus = 1\n"),
                 "noise.bogus"));
  CHECK(contains(config_error_of(base, {{"ramsey.trajectories", "5"}}), "ramsey.trajectories"));
  CHECK(contains(config_error_of(base, {{"probe.g", "0.1"}}), "does not apply"));
  CHECK(contains(config_error_of("[run]\nexperiment = ramsey\n[noise]\nkind = ou\n"),
                 "noise.b, emitter.s"));
  CHECK(contains(config_error_of("[noise]\nkind = ou\n"), "run.experiment"));
  CHECK(contains(config_error_of(base, {}, "qpt"), "run.experiment"));
  CHECK(contains(config_error_of(base, {{"run.unit", "gamma"}}), "unit mismatch"));
  CHECK(contains(config_error_of(base, {{"noise.tau", "2"}}), "noise.tau"));
  CHECK(contains(config_error_of(base, {{"emitter.s", "forty"}}), "not a number"));
  CHECK(contains(config_error_of(base, {{"ramsey.horizon", "-1"}}), "must be > 0"));
  CHECK(contains(config_error_of(base, {{"ramsey.fit", "spline"}}), "not one of"));
  CHECK(contains(config_error_of(base, {{"ramsey.n_trajectories", "1.5"}}), "non-negative integer"));
  CHECK_FALSE(config_error_of("[run\nexperiment = ramsey\n").empty());

  const std::string spec =
      "[run]\nexperiment = spectroscopy\n[emitter]\ns = 40\ndelta = 800\n"
      "[probe]\ng = 0.1\n[spectroscopy]\ndelta_omegas = 0\nchis = 1\n";
  CHECK(config_error_of(spec).empty());
  CHECK(contains(config_error_of(spec, {{"emitter.gamma", "2"}}), "1/gamma"));
  CHECK(contains(config_error_of(spec, {{"run.unit", "tau"}}), "unit mismatch"));

  try {
    load_config(kConfigs / "does_not_exist.ini");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::config || e.code() == ErrorCode::io));
  }
}

TEST_CASE("canonical numbers make equal configs compare equal") {
  const Override a[] = {{"noise.b", "19.0"}, {"ramsey.horizon", "3.33e1"}};
  CHECK(parse_config(kMinimalRamsey, a) == parse_config(kMinimalRamsey));
  const Override b[] = {{"noise.b", "19.5"}};
  CHECK_FALSE(parse_config(kMinimalRamsey, b) == parse_config(kMinimalRamsey));
}
