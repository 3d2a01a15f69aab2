#pragma once

// INI run configuration. Sections: [run], [domain], [solver], [trajectory],
// [analysis], [control], [output]. Everything is read and range-checked up
// front; errors throw billiards::Error{config_error} or {invalid_geometry}.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "billiards/dynamics.hpp"
#include "billiards/geometry.hpp"
#include "billiards/microlocal.hpp"
#include "billiards/modes1d.hpp"
#include "billiards/verify.hpp"

namespace billiards::cli {

struct TrajectoryConfig {
  Point origin;
  Direction direction;
  double max_length = 0.0;  // 0: two closed lengths (rational) or 50 (irrational)
  long q_max = 1000;
};

struct RunConfig {
  std::filesystem::path source;
  std::uint64_t seed = 0x5eedULL;
  DomainSpec domain;
  VerifyWindow window;
  std::optional<double> target;  // solve around a target instead of above lambda_min
  std::optional<TrajectoryConfig> trajectory;

  // analysis
  double eps = 0.1;
  std::vector<Region> regions;  // rectangle harness V
  TubeOptions tube;
  std::vector<int> control_js;  // slit-tube negative control
  int control_grid = 256;
  std::vector<int> husimi_indices;
  PhaseGridSpec phase;
  std::optional<std::filesystem::path> spectrum;  // reuse instead of solving
  int unfold_index = 0;
  ControlOptions control;

  std::filesystem::path out_dir = "out";
};

RunConfig load_config(const std::filesystem::path& path);

}  // namespace billiards::cli
