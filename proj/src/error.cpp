#include "ofc/error.hpp"

namespace ofc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSyntax: return "SyntaxError";
    case ErrorCode::kSchema: return "SchemaError";
    case ErrorCode::kChainMismatch: return "ChainMismatch";
    case ErrorCode::kUnknownSolver: return "UnknownSolver";
    case ErrorCode::kMissingInputSlot: return "MissingInputSlot";
    case ErrorCode::kDuplicateKey: return "DuplicateKey";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kGateway: return "GatewayError";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kAuth: return "AuthError";
    case ErrorCode::kProvider: return "ProviderError";
    case ErrorCode::kRateLimited: return "RateLimited";
    case ErrorCode::kNetwork: return "NetworkError";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kEmptyEvidence: return "EmptyEvidence";
    case ErrorCode::kEmptyVerdicts: return "EmptyVerdicts";
    case ErrorCode::kNli: return "NLIError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kInvariantViolation: return "InvariantViolation";
    case ErrorCode::kUnresolvedId: return "UnresolvedId";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kNoResults: return "NoResults";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kConflict: return "Conflict";
    case ErrorCode::kIo: return "IOError";
  }
  return "Unknown";
}

bool is_backend_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kGateway:
    case ErrorCode::kTimeout:
    case ErrorCode::kAuth:
    case ErrorCode::kProvider:
    case ErrorCode::kRateLimited:
    case ErrorCode::kNetwork:
    case ErrorCode::kNli:
      return true;
    default:
      return false;
  }
}

}  // namespace ofc
