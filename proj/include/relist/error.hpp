#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace relist {

enum class ErrorKind {
  SelfRelationship,
  EmptyName,
  DuplicatePair,
  EmptySet,
  LexiconTooSmall,
  InvalidConfig,
  InvalidFraction,
  ParseError,
  IoError,
  AlignmentError,
  EmptyTrainingSet,
  Divergence,
  IncompatibleVocabulary,
  MisalignedReports,
  BatchError,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string &reason);

  std::size_t line() const noexcept { return line_; }
  const std::string &reason() const noexcept { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

}  // namespace relist
