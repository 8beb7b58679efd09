#include "vanetsim/core.hpp"

namespace vanetsim {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::OffRoute: return "OffRoute";
    case Errc::Truncated: return "Truncated";
    case Errc::UnknownKind: return "UnknownKind";
    case Errc::FieldOutOfRange: return "FieldOutOfRange";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::UnknownEthertype: return "UnknownEthertype";
    case Errc::PayloadTooLarge: return "PayloadTooLarge";
    case Errc::StalePoA: return "StalePoA";
    case Errc::ClockSkew: return "ClockSkew";
    case Errc::InsufficientHistory: return "InsufficientHistory";
    case Errc::UnknownRsu: return "UnknownRsu";
    case Errc::StorageFailure: return "StorageFailure";
    case Errc::CryptoFailure: return "CryptoFailure";
    case Errc::IntegrityFailure: return "IntegrityFailure";
    case Errc::DecryptFailure: return "DecryptFailure";
    case Errc::AuthFailure: return "AuthFailure";
    case Errc::KeyUnavailable: return "KeyUnavailable";
    case Errc::CorruptStream: return "CorruptStream";
    case Errc::DegenerateData: return "DegenerateData";
    case Errc::InsufficientWindow: return "InsufficientWindow";
    case Errc::NoRsuInRange: return "NoRsuInRange";
    case Errc::ParseError: return "ParseError";
    case Errc::ValidationError: return "ValidationError";
    case Errc::IoError: return "IoError";
  }
  return "?";
}

}  // namespace vanetsim
