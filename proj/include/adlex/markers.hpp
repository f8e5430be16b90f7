#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "adlex/corpus.hpp"
#include "json.hpp"

namespace adlex::markers {

struct TaggedToken {
  std::string token;
  std::string tag;  // Penn Treebank
  friend bool operator==(const TaggedToken&, const TaggedToken&) = default;
};

enum class FeatureKind { Unigram, Pos };
enum class Direction { Control, Dementia };
enum class TaggerBackend { Lexicon, External };

const char* to_string(FeatureKind k);
const char* to_string(Direction d);
FeatureKind parse_kind(const std::string& s);
// Throws UnknownBackend.
TaggerBackend parse_backend(const std::string& s);

// Closed-class lexicon plus suffix rules. Punctuation gets its PTB symbol tag.
std::string lexicon_tag(const std::string& token);
std::vector<TaggedToken> lexicon_tag(std::span<const std::string> tokens);

// Sidecar JSONL: {"id": ..., "tags": [[token, tag], ...]} per line.
using ExternalTags = std::map<std::string, std::vector<TaggedToken>>;
ExternalTags read_tags_jsonl(const std::filesystem::path& path);

struct Tagger {
  TaggerBackend backend = TaggerBackend::Lexicon;
  const ExternalTags* external = nullptr;

  // External backend throws MissingMetadata for ids without a sidecar entry.
  std::vector<TaggedToken> tag(const Transcript& t) const;
};

// Word tokens only; punctuation tags are not counted as POS features.
bool is_punctuation_tag(const std::string& tag);

struct FeatureMatrix {
  std::vector<std::string> features;
  std::vector<std::string> ids;   // rows
  std::vector<int> labels;        // per row, 0 control / 1 dementia
  std::vector<std::vector<double>> values;
  std::vector<std::string> excluded;  // transcripts without any counted feature
};

// Rows are relative frequencies over the kept features. Throws NoFeatures.
FeatureMatrix feature_matrix(const Dataset& data, FeatureKind kind, int min_doc_freq,
                             const Tagger& tagger = {});

struct MarkerResult {
  std::string feature;
  FeatureKind kind = FeatureKind::Unigram;
  double r = 0.0;
  double p = 1.0;
  double p_adjusted = 1.0;
  Direction direction = Direction::Control;
};

// Point-biserial per column, BH across all columns, keep p_adjusted < alpha,
// sort by |r| descending then feature name.
std::vector<MarkerResult> correlate(const FeatureMatrix& m, FeatureKind kind, double alpha);

std::vector<MarkerResult> correlate_markers(const Dataset& data, FeatureKind kind, int min_doc_freq,
                                            double alpha, const Tagger& tagger = {});

nlohmann::json to_json(const std::vector<MarkerResult>& rows, FeatureKind kind, int min_doc_freq,
                       double alpha, const std::vector<std::string>& excluded);

}  // namespace adlex::markers
