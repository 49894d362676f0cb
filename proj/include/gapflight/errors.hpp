#pragma once

#include <stdexcept>
#include <string>

namespace gapflight {

struct PlanningError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateGap : PlanningError {
  using PlanningError::PlanningError;
};

struct InvalidParams : PlanningError {
  using PlanningError::PlanningError;
};

struct OutOfRange : PlanningError {
  using PlanningError::PlanningError;
};

struct Infeasible : PlanningError {
  using PlanningError::PlanningError;
};

struct InvalidDuration : PlanningError {
  using PlanningError::PlanningError;
};

struct DegenerateBearing : PlanningError {
  using PlanningError::PlanningError;
};

struct DegenerateHeading : PlanningError {
  using PlanningError::PlanningError;
};

struct NoFeasibleCandidate : PlanningError {
  using PlanningError::PlanningError;
};

struct NotVisible : PlanningError {
  using PlanningError::PlanningError;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gapflight
