#include "did/error.hpp"

namespace did {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnbalancedPanel: return "UnbalancedPanel";
    case ErrorCode::DuplicateCell: return "DuplicateCell";
    case ErrorCode::InconsistentFirstTreat: return "InconsistentFirstTreat";
    case ErrorCode::InconsistentUnitAttribute: return "InconsistentUnitAttribute";
    case ErrorCode::EmptyComparisonSet: return "EmptyComparisonSet";
    case ErrorCode::EmptyTreatedCell: return "EmptyTreatedCell";
    case ErrorCode::UnknownGroup: return "UnknownGroup";
    case ErrorCode::NoIdentifiedCells: return "NoIdentifiedCells";
    case ErrorCode::IneligibleGroup: return "IneligibleGroup";
    case ErrorCode::NoPostCells: return "NoPostCells";
    case ErrorCode::NoCommonE: return "NoCommonE";
    case ErrorCode::TooManyMoments: return "TooManyMoments";
    case ErrorCode::SingularSigma: return "SingularSigma";
    case ErrorCode::RankDeficientJacobian: return "RankDeficientJacobian";
    case ErrorCode::JustIdentified: return "JustIdentified";
    case ErrorCode::CollinearDesign: return "CollinearDesign";
    case ErrorCode::InvalidShares: return "InvalidShares";
    case ErrorCode::MissingStratum: return "MissingStratum";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ParseError:
    case ErrorCode::UnbalancedPanel:
    case ErrorCode::DuplicateCell:
    case ErrorCode::InconsistentFirstTreat:
    case ErrorCode::InconsistentUnitAttribute:
    case ErrorCode::InvalidShares:
    case ErrorCode::MissingStratum:
      return true;
    default:
      return false;
  }
}

}  // namespace did
