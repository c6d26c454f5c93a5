#include "ivjump/error.hpp"

namespace ivjump {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::DuplicateTimestamp: return "DuplicateTimestamp";
    case ErrorCode::NonMonotoneTimestamp: return "NonMonotoneTimestamp";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::CrossedQuote: return "CrossedQuote";
    case ErrorCode::UnknownRight: return "UnknownRight";
    case ErrorCode::ExpiredOption: return "ExpiredOption";
    case ErrorCode::MissingRate: return "MissingRate";
    case ErrorCode::Io: return "Io";
    case ErrorCode::PriceOutOfBounds: return "PriceOutOfBounds";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ParityDegenerate: return "ParityDegenerate";
    case ErrorCode::EmptyCrossSection: return "EmptyCrossSection";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::ExtrapolationOutOfRange: return "ExtrapolationOutOfRange";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::EmptyReferenceMinute: return "EmptyReferenceMinute";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::AmbiguousLabel: return "AmbiguousLabel";
    case ErrorCode::MissingMinutes: return "MissingMinutes";
    case ErrorCode::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
  }
  return "Unknown";
}

}  // namespace ivjump
