#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "stepdelay/runner.hpp"
#include "stepdelay/verify.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::ios_base::failure("cannot read config file " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

int dispatch(stepdelay::RunConfig cfg) {
  const auto files = stepdelay::run(cfg);
  for (const auto& f : files) std::cout << "wrote " << cfg.output_dir << "/" << f << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stepdelay: stationary scattering data and wave-packet time delays for "
               "one-dimensional steplike potentials"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int threads = 0;
  long seed = 0;  // reserved; nothing numerical depends on it
  double tol_scale = 0.0;
  bool quick = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out_dir, "output directory override");
    sub->add_option("--threads", threads, "worker threads for energy sweeps");
    sub->add_option("--seed", seed, "reserved; no numerical effect");
    sub->add_option("--tol-scale", tol_scale, "multiply certificate tolerances");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "execute the experiment in a config file");
  run_cmd->add_option("config", config_path, "JSON run config")->required();
  add_common(run_cmd);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "scattering sweep from a config file");
  sweep_cmd->add_option("config", config_path, "JSON run config")->required();
  add_common(sweep_cmd);

  CLI::App* verify_cmd = app.add_subcommand("verify-all", "run the acceptance matrix");
  verify_cmd->add_flag("--quick", quick, "smaller grids and horizons (smoke run)");
  add_common(verify_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    stepdelay::RunConfig cfg;
    if (run_cmd->parsed() || sweep_cmd->parsed()) {
      cfg = stepdelay::parse_run_config(read_file(config_path));
      if (sweep_cmd->parsed()) cfg.experiment = "sweep";
    } else {
      cfg.experiment = "verify-all";
      cfg.output_dir = "verify_out";
      cfg.quick = quick;
    }
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (threads > 0) cfg.threads = threads;
    if (tol_scale > 0.0) cfg.tol_scale = tol_scale;

    if (cfg.experiment == "verify-all") {
      const auto results = stepdelay::verify::run_all(cfg.quick, cfg.tol_scale, cfg.threads);
      bool all_ok = true;
      for (const auto& r : results) {
        std::cout << (r.pass ? "PASS" : "FAIL") << "  criterion " << r.name << "  ["
                  << stepdelay::format_g17(r.seconds) << " s]\n      " << r.detail << "\n";
        all_ok = all_ok && r.pass;
      }
      std::filesystem::create_directories(cfg.output_dir);
      std::ofstream os(std::filesystem::path(cfg.output_dir) / "verify_report.json");
      os << stepdelay::verify::report_json(results) << "\n";
      std::cout << (all_ok ? "all criteria passed" : "some criteria FAILED") << "\n";
      return all_ok ? 0 : 3;
    }
    return dispatch(cfg);
  } catch (const stepdelay::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const stepdelay::CertificateError& e) {
    std::cerr << "certificate failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
