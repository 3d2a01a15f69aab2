#include "billiards/errors.hpp"

namespace billiards {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_geometry: return "InvalidGeometry";
    case ErrorKind::resolution_too_coarse: return "ResolutionTooCoarse";
    case ErrorKind::empty_region: return "EmptyRegion";
    case ErrorKind::convergence_failure: return "ConvergenceFailure";
    case ErrorKind::shift_breakdown: return "ShiftBreakdown";
    case ErrorKind::resonant_mode: return "ResonantMode";
    case ErrorKind::degenerate_start: return "DegenerateStart";
    case ErrorKind::trajectory_hits_obstacle: return "TrajectoryHitsObstacle";
    case ErrorKind::inconclusive_lift: return "InconclusiveLift";
    case ErrorKind::not_x_bounded: return "NotXBounded";
    case ErrorKind::iteration_cap_exceeded: return "IterationCapExceeded";
    case ErrorKind::plan_mismatch: return "PlanMismatch";
    case ErrorKind::gamma_not_on_grid: return "GammaNotOnGrid";
    case ErrorKind::phase_grid_too_coarse: return "PhaseGridTooCoarse";
    case ErrorKind::config_error: return "ConfigError";
    case ErrorKind::io_error: return "IOError";
  }
  return "Error";
}

}  // namespace billiards
