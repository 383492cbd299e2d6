#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nonmono {

enum class ErrorCode {
  ZeroMatrix,
  NotParallelSummable,
  SingularResolvent,
  NotLinear,
  DimensionMismatch,
  InvalidModuli,
  Infeasible,
  RangeConditionViolated,
  NotInGraph,
  EmptyWindow,
  StepsizeOutOfRange,
  ExistenceViolated,
  RequestedOutOfWindow,
  CaseViolated,
  WrongBranch,
  NoStableLambda,
  SingularOperator,
  UnknownName,
  NotGeometric,
};

std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace nonmono
