#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace billiards {

enum class ErrorKind {
  invalid_geometry,
  resolution_too_coarse,
  empty_region,
  convergence_failure,
  shift_breakdown,
  resonant_mode,
  degenerate_start,
  trajectory_hits_obstacle,
  inconclusive_lift,
  not_x_bounded,
  iteration_cap_exceeded,
  plan_mismatch,
  gamma_not_on_grid,
  phase_grid_too_coarse,
  config_error,
  io_error,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace billiards
