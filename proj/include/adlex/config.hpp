#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adlex/lime.hpp"
#include "adlex/markers.hpp"
#include "adlex/stats.hpp"
#include "adlex/trainer.hpp"
#include "json.hpp"

namespace adlex {

// Every tunable of the pipeline. Text form is one `key = value` per line with
// `#` comments; unknown or repeated keys are rejected and every value is
// checked at load time (ConfigError).
struct RunConfig {
  std::optional<std::uint64_t> seed;

  // statistics
  stats::TTestVariant t_test = stats::TTestVariant::Student;
  double significance = 0.05;

  // divergence
  double alpha_d = 0.2;
  double log_base = 0.0;  // 0 = natural log

  // markers
  int min_doc_freq = 5;
  double marker_alpha = 0.05;
  markers::TaggerBackend tagger = markers::TaggerBackend::Lexicon;
  std::string tags_file;

  // model / training
  model::ModelConfig model;
  model::LossConfig loss;
  bool balanced_severity = true;
  trainer::TrainSchedule schedule;
  int cv_folds = 10;
  int cv_repeats = 3;
  double val_frac = 0.2;

  // explainer
  lime::Options lime;

  void set(const std::string& key, const std::string& value);
  void validate() const;

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);
  static const std::vector<std::string>& keys();

  // Canonical text form; parse(to_text()) reproduces the config.
  std::string to_text() const;
  nlohmann::json to_json() const;

  trainer::RunOptions run_options() const;
};

}  // namespace adlex
