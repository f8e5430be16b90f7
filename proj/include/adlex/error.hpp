#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adlex {

enum class Errc {
  // chat_parser
  MalformedTier,
  EmptyDocument,
  UnbalancedBracket,
  // corpus
  OutOfRange,
  TooFewSamples,
  MissingMetadata,
  DuplicateId,
  InvalidTranscript,
  // textstats / stats
  DegenerateGroup,
  DomainError,
  // lexical_divergence
  BothEmpty,
  EmptyModel,
  ZeroDenominator,
  // marker_correlation
  NoFeatures,
  UnknownBackend,
  // tensor_core
  ShapeMismatch,
  NonScalarLoss,
  TapeConsumed,
  // model
  TooShort,
  MissingEmbedding,
  InvalidSeverity,
  // trainer
  EmptySplit,
  // lime_explainer
  SingularSystem,
  // cli
  UsageError,
  ConfigError,
  NoArtifacts,
  IoError,
  ParseError,
};

std::string_view to_string(Errc code);

// Validation errors map to CLI exit code 1, everything else to 2.
bool is_validation_error(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace adlex
