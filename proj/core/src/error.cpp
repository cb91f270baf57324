#include "gazequiz/error.hpp"

namespace gazequiz {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::PointAtInfinity: return "PointAtInfinity";
    case ErrorCode::InvalidIntrinsics: return "InvalidIntrinsics";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DictionaryExhausted: return "DictionaryExhausted";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::ReplayError: return "ReplayError";
    case ErrorCode::DriverTimeout: return "DriverTimeout";
    case ErrorCode::StorageError: return "StorageError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::EmptyExport: return "EmptyExport";
    case ErrorCode::InsufficientParticipants: return "InsufficientParticipants";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
  }
  return "Unknown";
}

}  // namespace gazequiz
