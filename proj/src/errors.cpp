#include "nonmono/errors.hpp"

namespace nonmono {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroMatrix: return "ZeroMatrix";
    case ErrorCode::NotParallelSummable: return "NotParallelSummable";
    case ErrorCode::SingularResolvent: return "SingularResolvent";
    case ErrorCode::NotLinear: return "NotLinear";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidModuli: return "InvalidModuli";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::RangeConditionViolated: return "RangeConditionViolated";
    case ErrorCode::NotInGraph: return "NotInGraph";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::StepsizeOutOfRange: return "StepsizeOutOfRange";
    case ErrorCode::ExistenceViolated: return "ExistenceViolated";
    case ErrorCode::RequestedOutOfWindow: return "RequestedOutOfWindow";
    case ErrorCode::CaseViolated: return "CaseViolated";
    case ErrorCode::WrongBranch: return "WrongBranch";
    case ErrorCode::NoStableLambda: return "NoStableLambda";
    case ErrorCode::SingularOperator: return "SingularOperator";
    case ErrorCode::UnknownName: return "UnknownName";
    case ErrorCode::NotGeometric: return "NotGeometric";
  }
  return "Unknown";
}

}  // namespace nonmono
