#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace adlex {

enum class Label : int { Control = 0, Dementia = 1 };

std::string_view to_string(Label label);

enum class SeverityClass : int { Healthy = 0, Mild = 1, Moderate = 2, Severe = 3 };

std::string_view to_string(SeverityClass s);

// >=25 Healthy, 21-24 Mild, 10-20 Moderate, <=9 Severe. Throws OutOfRange
// outside [0, 30].
SeverityClass mmse_to_severity(int mmse);

// One participant's cleaned token stream with its label and optional MMSE.
// The constructor enforces the invariants (non-empty id and tokens, MMSE in
// [0, 30]) and throws InvalidTranscript otherwise.
class Transcript {
 public:
  Transcript(std::string id, std::vector<std::string> tokens, Label label,
             std::optional<int> mmse = std::nullopt);

  const std::string& id() const { return id_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  Label label() const { return label_; }
  int label_value() const { return static_cast<int>(label_); }
  const std::optional<int>& mmse() const { return mmse_; }
  std::optional<SeverityClass> severity() const;

  nlohmann::json to_json() const;
  static Transcript from_json(const nlohmann::json& j);

 private:
  std::string id_;
  std::vector<std::string> tokens_;
  Label label_;
  std::optional<int> mmse_;
};

using Dataset = std::vector<Transcript>;

std::size_t count_label(const Dataset& data, Label label);

std::string dataset_to_jsonl(const Dataset& data);
Dataset read_dataset_jsonl(const std::filesystem::path& path);

// Subset of `data` whose ids are listed, in the order given.
Dataset select(const Dataset& data, const std::vector<std::string>& ids);

struct Fold {
  int repeat = 0;
  int fold = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
};

struct CvPlan {
  int k = 0;
  int repeats = 0;
  std::uint64_t seed = 0;
  double val_frac = 0.2;
  std::vector<Fold> folds;  // ordered by (repeat, fold)

  nlohmann::json to_json() const;
};

// Label-stratified k-fold plan repeated `repeats` times. Each fold's train
// portion is split again (stratified) into train and validation with
// |val| = round(val_frac * |train portion|). Throws TooFewSamples when a class
// has fewer than k members, OutOfRange for k < 2 or repeats < 1.
CvPlan stratified_cv(const Dataset& data, int k, int repeats, double val_frac, std::uint64_t seed);

// Loads every .cha file below `root` (recursively), keeps PAR utterances
// cleaned with the default policy, and joins them to the id,label,mmse CSV.
// Throws MissingMetadata, DuplicateId; CSV rows without a file are skipped
// and reported through `warnings`.
Dataset load_corpus(const std::filesystem::path& root, const std::filesystem::path& labels_file,
                    std::vector<std::string>* warnings = nullptr);

struct MetadataRow {
  Label label;
  std::optional<int> mmse;
};
std::map<std::string, MetadataRow> read_metadata_csv(const std::filesystem::path& path);

// Knobs of the synthetic picture-description generator.
struct SynthProfile {
  int min_sentences = 8;
  int max_sentences = 16;
  // Per-transcript share of sentences drawn from the other group's style is
  // uniform on [0, cross_style_max].
  double cross_style_max = 0.3;
  double and_initial_rate = 0.5;        // dementia-style sentences opening with "and"
  double difficult_rate_control = 0.6;  // control-style sentences carrying a polysyllabic word
  double difficult_rate_dementia = 0.05;
  // Transcripts are resampled until the group lexicon counts differ by at
  // least this margin in the direction of their label.
  int separation_margin = 2;
  double mmse_missing_rate = 0.0;
};

// Deterministic given (seed, n_per_class, profile). Ids are "S###" with
// controls first.
Dataset generate_synthetic(std::uint64_t seed, int n_per_class, const SynthProfile& profile = {});

// Generator lexicons, exposed for tests and for the explainer checks.
const std::vector<std::string>& control_lexicon();
const std::vector<std::string>& dementia_lexicon();

// Renders the dataset as a CHAT tree (one .cha per transcript with PAR and INV
// tiers and annotation noise that cleans away), plus meta.csv and
// manifest.json ({"id": n_par_utterances}). Returns the manifest.
std::map<std::string, int> write_cha_tree(const Dataset& data, const std::filesystem::path& dir,
                                          std::uint64_t seed);

}  // namespace adlex
