#include "labelgen/error.hpp"

namespace labelgen {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kMalformedHeader: return "malformed-header";
    case ErrorKind::kTruncatedPayload: return "truncated-payload";
    case ErrorKind::kBadMaxval: return "bad-maxval";
    case ErrorKind::kTrailingData: return "trailing-data";
    case ErrorKind::kBadMagic: return "bad-magic";
    case ErrorKind::kSizeMismatch: return "size-mismatch";
    case ErrorKind::kNonFinite: return "non-finite";
    case ErrorKind::kDuplicateId: return "duplicate-id";
    case ErrorKind::kMissingField: return "missing-field";
    case ErrorKind::kUnknownProvenance: return "unknown-provenance";
    case ErrorKind::kInvalidLabel: return "invalid-label";
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kDimensionMismatch: return "dimension-mismatch";
    case ErrorKind::kNotPositiveSemidefinite: return "not-positive-semidefinite";
    case ErrorKind::kEmptyInput: return "empty-input";
    case ErrorKind::kUnknownTask: return "unknown-task";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

}  // namespace labelgen
