#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "adlex/corpus.hpp"
#include "adlex/model.hpp"
#include "json.hpp"

namespace adlex::trainer {

using model::Classifier;
using tensor::Matrix;
using tensor::Parameter;

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

// One bias-corrected Adam update of every parameter from its .grad. Moments
// are allocated on first use. Throws ShapeMismatch if a parameter's shape no
// longer matches its moments.
void adam_step(const std::vector<Parameter*>& params, AdamState& state, double lr);

struct TrainSchedule {
  double phase1_lr = 1e-4;         // frozen encoder, STL
  double coattn_phase1_lr = 1e-3;  // frozen encoder, siamese
  double phase2_lr = 1e-5;         // unfrozen
  double mtl_lr = 1e-6;            // MTL single phase
  int es_patience_phase1 = 9;
  int es_patience_phase2 = 3;
  int es_patience_mtl = 8;
  double rlrop_factor = 0.2;
  int rlrop_patience = 3;
  int max_epochs = 500;  // per phase
  int batch_size = 8;
  double min_delta = 1e-6;

  void validate() const;
  nlohmann::json to_json() const;
};

struct PhaseSpec {
  std::string name;
  double lr = 0.0;
  int patience = 1;
  bool reduce_on_plateau = false;
  double rlrop_factor = 0.2;
  int rlrop_patience = 3;
  bool encoder_trainable = true;
  int max_epochs = 500;
};

// STL and siamese: frozen-encoder phase with LR reduction, then an unfrozen
// phase with early stopping only. MTL: one phase. MTL-DE keeps the shared
// encoder frozen throughout.
std::vector<PhaseSpec> phase_plan(model::Architecture arch, const TrainSchedule& s);

struct EpochRecord {
  int phase = 0;
  int epoch = 0;  // 1-based within the phase
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct PhaseSummary {
  std::string name;
  int epochs = 0;
  bool early_stopped = false;
  double best_val_loss = 0.0;
  int best_epoch = 0;
};

struct FitResult {
  std::vector<EpochRecord> history;
  std::vector<PhaseSummary> phases;
};

struct Metrics {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  double specificity = 0.0;

  nlohmann::json to_json() const;
};

// Dementia is the positive class; ratios with a zero denominator are 0.
Metrics metrics_from_counts(long tp, long fp, long tn, long fn);
Metrics metrics_from_predictions(const std::vector<int>& truth, const std::vector<int>& predicted);

// Generic phase runner. train_example(i, rng) back-propagates one training
// example's loss into the parameters and returns its value; val_loss returns
// the mean validation loss. Tests drive it with stub objectives.
struct LoopHooks {
  std::function<double(std::size_t, Rng&)> train_example;  // grads accumulate into params
  std::function<double()> val_loss;
  std::function<std::vector<Parameter*>()> trainable;
  std::function<void(bool)> set_encoder_trainable;
};

FitResult run_phases(const std::vector<PhaseSpec>& phases, std::size_t n_train, int batch_size,
                     double min_delta, std::uint64_t seed, const std::vector<Parameter*>& all_params,
                     const LoopHooks& hooks);

// Throws EmptySplit when train or val is empty.
FitResult fit(Classifier& m, const Dataset& train, const Dataset& val, const TrainSchedule& s,
              const model::LossConfig& lc, std::uint64_t seed);

// threshold 0.5 on P(dementia) for sigmoid heads, argmax for softmax heads.
int predict_label(const Classifier& m, const Transcript& t);
Metrics evaluate(const Classifier& m, const Dataset& test);

struct FoldReport {
  int repeat = 0;
  int fold = 0;
  std::uint64_t seed = 0;
  Metrics test;
  Metrics train;
  FitResult fit;
};

struct CvReport {
  std::vector<FoldReport> folds;  // ordered by (repeat, fold)
  Metrics mean;                   // counts summed, ratios averaged
  Metrics std;                    // sample std of ratios

  nlohmann::json to_json(bool with_history = true) const;
};

// Mean and sample standard deviation of each ratio over the folds.
std::pair<Metrics, Metrics> aggregate(const std::vector<Metrics>& per_fold);

std::uint64_t fold_seed(std::uint64_t seed, int repeat, int fold);

struct RunOptions {
  model::ModelConfig model;
  TrainSchedule schedule;
  model::LossConfig loss;  // severity weights recomputed per fold
  bool balanced_severity = true;
  std::shared_ptr<const model::PrecomputedStore> store;
};

// Vocabulary, class weights and initialization all come from each fold's own
// training portion and seed; folds run on up to `jobs` threads.
CvReport cross_validate(const Dataset& data, const CvPlan& plan, const RunOptions& opts, int jobs = 1);

// Model for a single (train, val) split, as used inside each fold.
Classifier train_model(const Dataset& train, const Dataset& val, const RunOptions& opts, std::uint64_t seed,
                       FitResult* fit_out = nullptr);

}  // namespace adlex::trainer
