#include "cavkit/error.hpp"

namespace cavkit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownConcept: return "UnknownConcept";
    case ErrorCode::NoPairMapping: return "NoPairMapping";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::CvInfeasible: return "CvInfeasible";
    case ErrorCode::EmptyEval: return "EmptyEval";
    case ErrorCode::AllZeroRows: return "AllZeroRows";
    case ErrorCode::AllPairsIdentical: return "AllPairsIdentical";
    case ErrorCode::NoSurvivingNeurons: return "NoSurvivingNeurons";
    case ErrorCode::FewerThanKActive: return "FewerThanKActive";
    case ErrorCode::EmptySide: return "EmptySide";
    case ErrorCode::DegenerateNegatives: return "DegenerateNegatives";
    case ErrorCode::EmptyOthers: return "EmptyOthers";
    case ErrorCode::DegenerateBaseline: return "DegenerateBaseline";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateGap: return "DegenerateGap";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace cavkit
