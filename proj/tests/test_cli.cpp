#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "stepdelay/runner.hpp"

using namespace stepdelay;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("run config parsing: defaults and validation") {
  const RunConfig cfg = parse_run_config(R"({
    "experiment": "sweep",
    "potential": {"kind": "pure-step", "v_left": 0.0, "v_right": 1.0},
    "sweep": {"e_min": 1.2, "e_max": 2.0, "points": 16}
  })");
  CHECK(cfg.experiment == "sweep");
  CHECK(cfg.threads == 1);
  CHECK(cfg.e_points == 1024);

  CHECK_THROWS_AS(parse_run_config("{bad json"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"experiment": "explode"})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"experiment": "delay", "tol_scale": -1.0})"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_run_config(R"({"experiment": "delay", "quadrature": {"tail_tol": 0.0}})"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_run_config(R"({"experiment": "delay",
        "potential": {"kind": "pure-step", "v_left": 1.0, "v_right": 0.0}})"),
      ConfigError);
}

TEST_CASE("sweep runs are deterministic and carry a checksummed manifest") {
  const fs::path base = fs::temp_directory_path() / "stepdelay_test_sweep";
  fs::remove_all(base);
  const std::string config = R"({
    "experiment": "sweep",
    "potential": {"kind": "smooth-step", "v_left": 0.0, "v_right": 1.0, "width": 1.0},
    "sweep": {"e_min": 1.2, "e_max": 2.4, "points": 24},
    "output_dir": ")" + (base / "a").string() + R"("
  })";
  RunConfig cfg_a = parse_run_config(config);
  const auto files_a = run(cfg_a);
  RunConfig cfg_b = cfg_a;
  cfg_b.output_dir = (base / "b").string();
  run(cfg_b);

  CHECK(slurp(base / "a" / "scattering.csv") == slurp(base / "b" / "scattering.csv"));

  const auto manifest = nlohmann::json::parse(slurp(base / "a" / "MANIFEST.json"));
  REQUIRE(manifest.contains("files"));
  bool found_csv = false;
  for (const auto& f : manifest["files"]) {
    if (f["name"] == "scattering.csv") {
      found_csv = true;
      const std::string body = slurp(base / "a" / "scattering.csv");
      CHECK(f["fnv1a"].get<std::string>() == hex64(fnv1a(body)));
    }
  }
  CHECK(found_csv);
  CHECK(manifest.contains("config"));
  fs::remove_all(base);
}

TEST_CASE("a small delay experiment produces the full artifact set") {
  const fs::path out = fs::temp_directory_path() / "stepdelay_test_delay";
  fs::remove_all(out);
  RunConfig cfg;
  cfg.experiment = "delay";
  cfg.output_dir = out.string();
  cfg.potential = make_step_plus_bump(0.0, 0.0, 0.3, 0.0, 1.0);
  cfg.packet.windows = {{1.5, 2.5}};
  cfg.packet.spread = 6.0;
  cfg.e_points = 256;
  cfg.grid.n = 2048;
  cfg.grid.dx = 0.4;
  cfg.schedule.r_min = 6.0;
  cfg.schedule.r_max = 20.0;
  cfg.schedule.count = 8;
  cfg.quad.split_dt = 0.05;
  cfg.quad.dt_sample = 0.1;
  cfg.quad.moller_defect_tol = 0.05;
  cfg.quad.tail_tol = 0.05;
  const auto files = run(cfg);
  for (const std::string name : {"scattering.csv", "packet.csv", "sojourn.csv",
                                 "delays.csv", "report.json", "MANIFEST.json"}) {
    CAPTURE(name);
    CHECK(fs::exists(out / name));
  }
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  CHECK(report.contains("tau_ew"));
  CHECK(report.contains("error_budget"));
  fs::remove_all(out);
}

TEST_CASE("failed certificates surface as errors, never silent success") {
  RunConfig cfg;
  cfg.experiment = "delay";
  cfg.output_dir = (fs::temp_directory_path() / "stepdelay_test_cert").string();
  cfg.potential = make_step_plus_bump(0.0, 1.0, 0.3, 0.0, 1.0);
  cfg.packet.windows = {{1.5, 2.5}};
  cfg.packet.spread = 5.0;
  cfg.e_points = 256;
  cfg.grid.n = 2048;
  cfg.grid.dx = 0.45;
  cfg.schedule.r_max = 16.0;
  cfg.schedule.count = 8;
  cfg.quad.split_dt = 0.05;
  cfg.quad.moller_defect_tol = 1e-12;  // unattainable by construction
  CHECK_THROWS_AS(run(cfg), CertificateError);
  fs::remove_all(cfg.output_dir);
}

TEST_CASE("packet experiments require windows") {
  RunConfig cfg;
  cfg.experiment = "delay";
  cfg.potential = make_pure_step(0.0, 1.0);
  CHECK_THROWS_AS(run(cfg), ConfigError);
}

TEST_CASE("resolved config serialization survives a parse round trip") {
  RunConfig cfg;
  cfg.experiment = "translate";
  cfg.potential = make_smooth_step(0.0, 1.0, 1.0);
  cfg.packet.windows = {{1.5, 2.5}};
  cfg.translate_x0 = 2.0;
  const std::string js = resolved_config_json(cfg);
  const RunConfig back = parse_run_config(js);
  CHECK(back.experiment == "translate");
  CHECK(back.translate_x0 == 2.0);
  CHECK(back.packet.windows.size() == 1);
  CHECK(back.packet.windows[0].e_lo == 1.5);
}
