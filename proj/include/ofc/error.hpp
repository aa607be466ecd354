#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ofc {

enum class ErrorCode {
  kSyntax,
  kSchema,
  kChainMismatch,
  kUnknownSolver,
  kMissingInputSlot,
  kDuplicateKey,
  kParse,
  kGateway,
  kTimeout,
  kAuth,
  kProvider,
  kRateLimited,
  kNetwork,
  kEmptyCorpus,
  kEmptyEvidence,
  kEmptyVerdicts,
  kNli,
  kInvalidArgument,
  kMalformedRecord,
  kInvariantViolation,
  kUnresolvedId,
  kDuplicateId,
  kNoResults,
  kNotFound,
  kConflict,
  kIo,
};

std::string_view to_string(ErrorCode code);

// True for every failure raised while talking to a model or search backend.
bool is_backend_error(ErrorCode code);

// Library-wide exception. `reason` is an optional machine-readable subkind
// (e.g. "EmptyPipeline" for a schema error).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  Error(ErrorCode code, std::string reason, const std::string& message)
      : std::runtime_error(message), code_(code), reason_(std::move(reason)) {}

  ErrorCode code() const { return code_; }
  const std::string& reason() const { return reason_; }

 private:
  ErrorCode code_;
  std::string reason_;
};

}  // namespace ofc
