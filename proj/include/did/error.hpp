#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace did {

enum class ErrorCode {
  InvalidArgument,
  ParseError,
  UnbalancedPanel,
  DuplicateCell,
  InconsistentFirstTreat,
  InconsistentUnitAttribute,
  EmptyComparisonSet,
  EmptyTreatedCell,
  UnknownGroup,
  NoIdentifiedCells,
  IneligibleGroup,
  NoPostCells,
  NoCommonE,
  TooManyMoments,
  SingularSigma,
  RankDeficientJacobian,
  JustIdentified,
  CollinearDesign,
  InvalidShares,
  MissingStratum,
};

// Stable machine-readable name, used in CLI/JSON error output.
std::string_view error_code_name(ErrorCode code) noexcept;

// Input/validation errors map to CLI exit code 2, estimation errors to 3.
bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace did
