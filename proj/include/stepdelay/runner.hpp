#pragma once

#include <string>
#include <vector>

#include "stepdelay/timedelay.hpp"

namespace stepdelay {

struct PacketConfig {
  double center_x = 0.0;
  double center_p = 0.0;  // 0 = auto: flux midpoint of the windows
  double spread = 5.0;
  std::vector<EnergyWindow> windows;
  double theta = 5.0;
  double ramp_fraction = 0.2;
};

struct GridConfig {
  int n = 0;        // 0 = auto (next power of two for the needed span)
  double dx = 0.0;  // 0 = auto (>= 8 points per shortest wavelength)
};

struct ScheduleConfig {
  double r_min = 6.0;
  double r_max = 40.0;
  int count = 24;
  bool geometric = true;
};

struct RunConfig {
  std::string experiment = "delay";  // sweep|delay|sigma|decompose|translate|verify-all
  std::string output_dir = "out";
  Potential potential;
  PacketConfig packet;
  int e_points = 1024;
  double e_padding = 0.03;  // fraction of the window span added on each side
  GridConfig grid;
  QuadratureSpec quad;
  StationaryOptions stationary;
  ScheduleConfig schedule;
  // sweep-only: explicit energy range
  double sweep_e_min = 0.0;
  double sweep_e_max = 0.0;
  int sweep_points = 512;
  double translate_x0 = 0.0;
  int threads = 1;
  double tol_scale = 1.0;
  bool quick = false;  // verify-all only
};

RunConfig parse_run_config(const std::string& json_text);
std::string resolved_config_json(const RunConfig& cfg);

// Builds the working objects shared by the experiments.
struct ExperimentSetup {
  Potential potential;
  SpatialGrid grid;
  AdmissiblePacket packet;
  std::vector<double> e_grid;
  ScatteringData data;
  TwoChannelSpectral phi_in;
  std::vector<double> r_values;
};

SpatialGrid auto_spatial_grid(const RunConfig& cfg);
ExperimentSetup prepare_experiment(const RunConfig& cfg);

struct DelayOutputs {
  TimeDelayReport report;
  SojournCurve curve;
};

DelayOutputs delay_experiment(const RunConfig& cfg, const ExperimentSetup& setup,
                              bool with_sigma = true, bool with_lr = true,
                              bool with_translation = false);

// Executes the configured experiment, writes artifacts + MANIFEST.json
// under cfg.output_dir, and returns the list of files written.
std::vector<std::string> run(const RunConfig& cfg);

}  // namespace stepdelay
