#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace labelgen {

/// Classifies every failure the library reports. The CLI maps all of these to
/// exit code 2 ("data error").
enum class ErrorKind {
  kMalformedHeader,
  kTruncatedPayload,
  kBadMaxval,
  kTrailingData,
  kBadMagic,
  kSizeMismatch,
  kNonFinite,
  kDuplicateId,
  kMissingField,
  kUnknownProvenance,
  kInvalidLabel,
  kInvalidArgument,
  kDimensionMismatch,
  kNotPositiveSemidefinite,
  kEmptyInput,
  kUnknownTask,
  kParse,
  kIo,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace labelgen
