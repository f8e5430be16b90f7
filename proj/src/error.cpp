#include "adlex/error.hpp"

namespace adlex {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::MalformedTier: return "MalformedTier";
    case Errc::EmptyDocument: return "EmptyDocument";
    case Errc::UnbalancedBracket: return "UnbalancedBracket";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::MissingMetadata: return "MissingMetadata";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::InvalidTranscript: return "InvalidTranscript";
    case Errc::DegenerateGroup: return "DegenerateGroup";
    case Errc::DomainError: return "DomainError";
    case Errc::BothEmpty: return "BothEmpty";
    case Errc::EmptyModel: return "EmptyModel";
    case Errc::ZeroDenominator: return "ZeroDenominator";
    case Errc::NoFeatures: return "NoFeatures";
    case Errc::UnknownBackend: return "UnknownBackend";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NonScalarLoss: return "NonScalarLoss";
    case Errc::TapeConsumed: return "TapeConsumed";
    case Errc::TooShort: return "TooShort";
    case Errc::MissingEmbedding: return "MissingEmbedding";
    case Errc::InvalidSeverity: return "InvalidSeverity";
    case Errc::EmptySplit: return "EmptySplit";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::UsageError: return "UsageError";
    case Errc::ConfigError: return "ConfigError";
    case Errc::NoArtifacts: return "NoArtifacts";
    case Errc::IoError: return "IoError";
    case Errc::ParseError: return "ParseError";
  }
  return "Unknown";
}

bool is_validation_error(Errc code) {
  switch (code) {
    case Errc::UsageError:
    case Errc::ConfigError:
    case Errc::OutOfRange:
    case Errc::MissingMetadata:
    case Errc::DuplicateId:
    case Errc::InvalidTranscript:
    case Errc::TooFewSamples:
    case Errc::UnknownBackend:
    case Errc::InvalidSeverity:
    case Errc::MalformedTier:
    case Errc::EmptyDocument:
    case Errc::UnbalancedBracket:
    case Errc::ParseError:
    case Errc::NoArtifacts:
      return true;
    default:
      return false;
  }
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace adlex
