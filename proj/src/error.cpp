#include "collapse/error.hpp"

namespace collapse {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_model: return "InvalidModel";
    case ErrorCode::inconsistent_constraints: return "InconsistentConstraints";
    case ErrorCode::infeasible_alpha: return "InfeasibleAlpha";
    case ErrorCode::boundary_alpha: return "BoundaryAlpha";
    case ErrorCode::max_iterations: return "MaxIterations";
    case ErrorCode::singular_hessian: return "SingularHessian";
    case ErrorCode::zero_probability: return "ZeroProbability";
    case ErrorCode::not_positive_definite: return "NotPositiveDefinite";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::out_of_range_symbol: return "OutOfRangeSymbol";
    case ErrorCode::enumeration_guard: return "EnumerationGuard";
    case ErrorCode::empty_feasible_set: return "EmptyFeasibleSet";
    case ErrorCode::empty_window: return "EmptyWindow";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::singular_matrix: return "SingularMatrix";
    case ErrorCode::io_error: return "IoError";
  }
  return "Unknown";
}

}  // namespace collapse
