#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ivjump {

// Every failure the library reports carries one of these codes so callers can
// branch on the kind without string matching.
enum class ErrorCode {
  // marketdata
  MalformedRow,
  DuplicateTimestamp,
  NonMonotoneTimestamp,
  InvalidValue,
  CrossedQuote,
  UnknownRight,
  ExpiredOption,
  MissingRate,
  Io,
  // pricing
  PriceOutOfBounds,
  NoConvergence,
  ParityDegenerate,
  // surface
  EmptyCrossSection,
  SingularSystem,
  ExtrapolationOutOfRange,
  // jumps
  SeriesTooShort,
  // smilepca
  EmptyReferenceMinute,
  RankDeficient,
  InsufficientData,
  AmbiguousLabel,
  // eventstudy
  MissingMinutes,
  RankDeficientDesign,
  // simulator / cli
  ConfigInvalid,
  SchemaMismatch,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ivjump
