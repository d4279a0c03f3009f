#include "relist/error.hpp"

namespace relist {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SelfRelationship: return "SelfRelationship";
    case ErrorKind::EmptyName: return "EmptyName";
    case ErrorKind::DuplicatePair: return "DuplicatePair";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::LexiconTooSmall: return "LexiconTooSmall";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidFraction: return "InvalidFraction";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::AlignmentError: return "AlignmentError";
    case ErrorKind::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorKind::Divergence: return "Divergence";
    case ErrorKind::IncompatibleVocabulary: return "IncompatibleVocabulary";
    case ErrorKind::MisalignedReports: return "MisalignedReports";
    case ErrorKind::BatchError: return "BatchError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string &message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

ParseError::ParseError(std::size_t line, const std::string &reason)
    : Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + reason),
      line_(line),
      reason_(reason) {}

}  // namespace relist
