#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cavkit {

enum class ErrorCode {
  EmptySelection,
  IndexOutOfRange,
  DegenerateVariance,
  ZeroNorm,
  DimensionMismatch,
  BadMagic,
  VersionMismatch,
  TruncatedFile,
  NonFiniteValue,
  ParseError,
  UnknownConcept,
  NoPairMapping,
  SingleClass,
  NonFiniteLoss,
  CvInfeasible,
  EmptyEval,
  AllZeroRows,
  AllPairsIdentical,
  NoSurvivingNeurons,
  FewerThanKActive,
  EmptySide,
  DegenerateNegatives,
  EmptyOthers,
  DegenerateBaseline,
  LengthMismatch,
  DegenerateGap,
  Empty,
  InvalidArgument,
  ConfigInvalid,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a code; the harness records
// the code name in the report row of a failed cell.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace cavkit
