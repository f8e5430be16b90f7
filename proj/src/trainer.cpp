#include "adlex/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include "adlex/error.hpp"
#include "adlex/log.hpp"
#include "adlex/stats.hpp"

namespace adlex::trainer {

void adam_step(const std::vector<Parameter*>& params, AdamState& st, double lr) {
  if (st.m.empty()) {
    for (auto* p : params) {
      st.m.emplace_back(p->value.rows, p->value.cols);
      st.v.emplace_back(p->value.rows, p->value.cols);
    }
  }
  if (st.m.size() != params.size()) throw Error(Errc::ShapeMismatch, "adam state tracks a different parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = *params[i];
    if (p.value.rows != st.m[i].rows || p.value.cols != st.m[i].cols || p.grad.rows != p.value.rows ||
        p.grad.cols != p.value.cols) {
      throw Error(Errc::ShapeMismatch, "adam: " + p.name + " is " + p.value.shape() + ", moments " + st.m[i].shape());
    }
  }
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    auto& m = st.m[i].data;
    auto& v = st.v[i].data;
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad.data[k];
      m[k] = st.beta1 * m[k] + (1.0 - st.beta1) * g;
      v[k] = st.beta2 * v[k] + (1.0 - st.beta2) * g * g;
      const double mh = m[k] / c1;
      const double vh = v[k] / c2;
      p.value.data[k] -= lr * mh / (std::sqrt(vh) + st.eps);
    }
  }
}

void TrainSchedule::validate() const {
  for (double lr : {phase1_lr, coattn_phase1_lr, phase2_lr, mtl_lr}) {
    if (!(lr > 0.0)) throw Error(Errc::ConfigError, "learning rates must be positive");
  }
  if (!(rlrop_factor > 0.0 && rlrop_factor < 1.0)) throw Error(Errc::ConfigError, "rlrop_factor must be in (0, 1)");
  if (es_patience_phase1 < 1 || es_patience_phase2 < 1 || es_patience_mtl < 1 || rlrop_patience < 1) {
    throw Error(Errc::ConfigError, "patiences must be at least 1");
  }
  if (max_epochs < 1) throw Error(Errc::ConfigError, "max_epochs must be at least 1");
  if (batch_size < 1) throw Error(Errc::ConfigError, "batch_size must be at least 1");
  if (!(min_delta >= 0.0)) throw Error(Errc::ConfigError, "min_delta must be non-negative");
}

nlohmann::json TrainSchedule::to_json() const {
  return {{"phase1_lr", phase1_lr},
          {"coattn_phase1_lr", coattn_phase1_lr},
          {"phase2_lr", phase2_lr},
          {"mtl_lr", mtl_lr},
          {"es_patience_phase1", es_patience_phase1},
          {"es_patience_phase2", es_patience_phase2},
          {"es_patience_mtl", es_patience_mtl},
          {"rlrop_factor", rlrop_factor},
          {"rlrop_patience", rlrop_patience},
          {"max_epochs", max_epochs},
          {"batch_size", batch_size},
          {"min_delta", min_delta}};
}

std::vector<PhaseSpec> phase_plan(model::Architecture arch, const TrainSchedule& s) {
  using model::Architecture;
  if (arch == Architecture::Mtl || arch == Architecture::MtlDe) {
    PhaseSpec p;
    p.name = "joint";
    p.lr = s.mtl_lr;
    p.patience = s.es_patience_mtl;
    p.encoder_trainable = arch == Architecture::Mtl;
    p.max_epochs = s.max_epochs;
    return {p};
  }
  PhaseSpec frozen;
  frozen.name = "frozen";
  frozen.lr = arch == Architecture::Siamese ? s.coattn_phase1_lr : s.phase1_lr;
  frozen.patience = s.es_patience_phase1;
  frozen.reduce_on_plateau = true;
  frozen.rlrop_factor = s.rlrop_factor;
  frozen.rlrop_patience = s.rlrop_patience;
  frozen.encoder_trainable = false;
  frozen.max_epochs = s.max_epochs;
  PhaseSpec unfrozen;
  unfrozen.name = "unfrozen";
  unfrozen.lr = s.phase2_lr;
  unfrozen.patience = s.es_patience_phase2;
  unfrozen.encoder_trainable = true;
  unfrozen.max_epochs = s.max_epochs;
  return {frozen, unfrozen};
}

FitResult run_phases(const std::vector<PhaseSpec>& phases, std::size_t n_train, int batch_size, double min_delta,
                     std::uint64_t seed, const std::vector<Parameter*>& all_params, const LoopHooks& hooks) {
  if (n_train == 0) throw Error(Errc::EmptySplit, "empty training split");
  FitResult result;
  const Rng base = Rng(seed).derive("epochs");
  for (std::size_t pi = 0; pi < phases.size(); ++pi) {
    const PhaseSpec& ph = phases[pi];
    if (hooks.set_encoder_trainable) hooks.set_encoder_trainable(ph.encoder_trainable);
    const auto trainable = hooks.trainable();
    AdamState adam;
    double lr = ph.lr;
    double best = std::numeric_limits<double>::infinity();
    double best_es = best, best_rl = best;
    int wait = 0, rl_wait = 0;
    std::vector<Matrix> snapshot;
    for (auto* p : all_params) snapshot.push_back(p->value);

    PhaseSummary summary;
    summary.name = ph.name;
    for (int epoch = 1; epoch <= ph.max_epochs; ++epoch) {
      Rng er = base.derive(static_cast<std::uint64_t>(pi)).derive(static_cast<std::uint64_t>(epoch));
      std::vector<std::size_t> order(n_train);
      std::iota(order.begin(), order.end(), 0);
      er.shuffle(order);
      Rng dropout_rng = er.derive("dropout");

      double train_sum = 0.0;
      for (std::size_t start = 0; start < n_train; start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(n_train, start + static_cast<std::size_t>(batch_size));
        for (auto* p : all_params) p->zero_grad();
        for (std::size_t i = start; i < end; ++i) train_sum += hooks.train_example(order[i], dropout_rng);
        const double inv = 1.0 / static_cast<double>(end - start);
        for (auto* p : trainable) {
          for (auto& g : p->grad.data) g *= inv;
        }
        if (!trainable.empty()) adam_step(trainable, adam, lr);
      }
      const double val = hooks.val_loss();
      result.history.push_back({static_cast<int>(pi), epoch, lr, train_sum / static_cast<double>(n_train), val});
      summary.epochs = epoch;

      if (val < best) {
        best = val;
        summary.best_epoch = epoch;
        for (std::size_t i = 0; i < all_params.size(); ++i) snapshot[i] = all_params[i]->value;
      }
      if (val < best_es - min_delta) {
        best_es = val;
        wait = 0;
      } else if (++wait >= ph.patience) {
        summary.early_stopped = true;
        break;
      }
      if (ph.reduce_on_plateau) {
        if (val < best_rl - min_delta) {
          best_rl = val;
          rl_wait = 0;
        } else if (++rl_wait >= ph.rlrop_patience) {
          lr *= ph.rlrop_factor;
          rl_wait = 0;
        }
      }
    }
    for (std::size_t i = 0; i < all_params.size(); ++i) {
      all_params[i]->value = snapshot[i];
      all_params[i]->zero_grad();
    }
    summary.best_val_loss = best;
    result.phases.push_back(summary);
    log::debug(ph.name + ": " + std::to_string(summary.epochs) + " epochs, best val " + std::to_string(best));
  }
  return result;
}

namespace {

std::optional<int> severity_of(const Transcript& t) {
  if (auto s = t.severity()) return static_cast<int>(*s);
  return std::nullopt;
}

}  // namespace

FitResult fit(Classifier& m, const Dataset& train, const Dataset& val, const TrainSchedule& s,
              const model::LossConfig& lc, std::uint64_t seed) {
  if (train.empty()) throw Error(Errc::EmptySplit, "empty training split");
  if (val.empty()) throw Error(Errc::EmptySplit, "empty validation split");
  s.validate();
  lc.validate();
  std::vector<model::Input> train_in, val_in;
  for (const auto& t : train) train_in.push_back(m.make_input(t));
  for (const auto& t : val) val_in.push_back(m.make_input(t));

  LoopHooks hooks;
  hooks.train_example = [&](std::size_t i, Rng& rng) {
    tensor::Tape tape;
    auto loss = m.loss(tape, train_in[i], train[i].label_value(), severity_of(train[i]), true, &rng, lc);
    const double v = loss.scalar();
    tape.backward(loss);
    return v;
  };
  hooks.val_loss = [&] {
    double sum = 0.0;
    for (std::size_t i = 0; i < val.size(); ++i) {
      tensor::Tape tape;
      sum += m.loss(tape, val_in[i], val[i].label_value(), severity_of(val[i]), false, nullptr, lc).scalar();
    }
    return sum / static_cast<double>(val.size());
  };
  hooks.trainable = [&] {
    std::vector<Parameter*> out;
    for (auto* p : m.parameters()) {
      if (p->trainable) out.push_back(p);
    }
    return out;
  };
  hooks.set_encoder_trainable = [&](bool on) { m.set_encoder_trainable(on); };

  auto result = run_phases(phase_plan(m.config().architecture, s), train.size(), s.batch_size, s.min_delta, seed,
                           m.parameters(), hooks);
  m.set_encoder_trainable(true);
  return result;
}

int predict_label(const Classifier& m, const Transcript& t) {
  tensor::Tape tape;
  auto out = m.forward(tape, m.make_input(t), false, nullptr);
  const auto& v = out.dementia.value();
  if (out.multitask) return v(0, 1) > v(0, 0) ? 1 : 0;
  return v(0, 0) >= 0.5 ? 1 : 0;
}

Metrics metrics_from_counts(long tp, long fp, long tn, long fn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.tn = tn;
  m.fn = fn;
  auto ratio = [](double a, double b) { return b > 0.0 ? a / b : 0.0; };
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  m.accuracy = ratio(tp + tn, tp + fp + tn + fn);
  m.specificity = ratio(tn, tn + fp);
  return m;
}

Metrics metrics_from_predictions(const std::vector<int>& truth, const std::vector<int>& predicted) {
  if (truth.size() != predicted.size()) throw Error(Errc::DomainError, "metrics: size mismatch");
  long tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == 1) {
      (truth[i] == 1 ? tp : fp)++;
    } else {
      (truth[i] == 0 ? tn : fn)++;
    }
  }
  return metrics_from_counts(tp, fp, tn, fn);
}

Metrics evaluate(const Classifier& m, const Dataset& test) {
  std::vector<int> truth, pred;
  for (const auto& t : test) {
    truth.push_back(t.label_value());
    pred.push_back(predict_label(m, t));
  }
  return metrics_from_predictions(truth, pred);
}

nlohmann::json Metrics::to_json() const {
  return {{"tp", tp},
          {"fp", fp},
          {"tn", tn},
          {"fn", fn},
          {"precision", precision},
          {"recall", recall},
          {"f1", f1},
          {"accuracy", accuracy},
          {"specificity", specificity}};
}

std::pair<Metrics, Metrics> aggregate(const std::vector<Metrics>& per_fold) {
  Metrics mean, sd;
  auto field = [&](double Metrics::*f) {
    std::vector<double> v;
    for (const auto& m : per_fold) v.push_back(m.*f);
    mean.*f = stats::mean(v);
    sd.*f = stats::sample_std(v);
  };
  field(&Metrics::precision);
  field(&Metrics::recall);
  field(&Metrics::f1);
  field(&Metrics::accuracy);
  field(&Metrics::specificity);
  for (const auto& m : per_fold) {
    mean.tp += m.tp;
    mean.fp += m.fp;
    mean.tn += m.tn;
    mean.fn += m.fn;
  }
  return {mean, sd};
}

std::uint64_t fold_seed(std::uint64_t seed, int repeat, int fold) {
  return Rng(seed).derive("fold").derive(static_cast<std::uint64_t>(repeat)).derive(static_cast<std::uint64_t>(fold)).key();
}

Classifier train_model(const Dataset& train, const Dataset& val, const RunOptions& opts, std::uint64_t seed,
                       FitResult* fit_out) {
  if (train.empty()) throw Error(Errc::EmptySplit, "empty training split");
  model::LossConfig lc = opts.loss;
  if (opts.balanced_severity) lc.severity_weights = model::balanced_severity_weights(train);
  Classifier m(opts.model, model::Vocabulary::build(train), seed, opts.store);
  auto fr = fit(m, train, val, opts.schedule, lc, Rng(seed).derive("fit").key());
  if (fit_out) *fit_out = std::move(fr);
  return m;
}

CvReport cross_validate(const Dataset& data, const CvPlan& plan, const RunOptions& opts, int jobs) {
  CvReport report;
  report.folds.resize(plan.folds.size());
  std::vector<std::exception_ptr> errors(plan.folds.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < plan.folds.size(); i = next++) {
      try {
        const Fold& f = plan.folds[i];
        FoldReport fr;
        fr.repeat = f.repeat;
        fr.fold = f.fold;
        fr.seed = fold_seed(plan.seed, f.repeat, f.fold);
        const Dataset train = select(data, f.train_ids);
        const Dataset val = select(data, f.val_ids);
        const Dataset test = select(data, f.test_ids);
        if (test.empty()) throw Error(Errc::EmptySplit, "empty test split");
        Classifier m = train_model(train, val, opts, fr.seed, &fr.fit);
        fr.test = evaluate(m, test);
        fr.train = evaluate(m, train);
        log::info("fold " + std::to_string(f.repeat) + "/" + std::to_string(f.fold) + " accuracy " +
                  std::to_string(fr.test.accuracy));
        report.folds[i] = std::move(fr);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(plan.folds.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<Metrics> tests;
  for (const auto& f : report.folds) tests.push_back(f.test);
  std::tie(report.mean, report.std) = aggregate(tests);
  return report;
}

nlohmann::json CvReport::to_json(bool with_history) const {
  nlohmann::json folds_j = nlohmann::json::array();
  for (const auto& f : folds) {
    nlohmann::json j = {{"repeat", f.repeat},
                        {"fold", f.fold},
                        {"seed", f.seed},
                        {"test", f.test.to_json()},
                        {"train", f.train.to_json()}};
    nlohmann::json phases = nlohmann::json::array();
    for (const auto& p : f.fit.phases) {
      phases.push_back({{"name", p.name},
                        {"epochs", p.epochs},
                        {"early_stopped", p.early_stopped},
                        {"best_epoch", p.best_epoch},
                        {"best_val_loss", p.best_val_loss}});
    }
    j["phases"] = std::move(phases);
    if (with_history) {
      nlohmann::json h = nlohmann::json::array();
      for (const auto& e : f.fit.history) {
        h.push_back({{"phase", e.phase}, {"epoch", e.epoch}, {"lr", e.lr}, {"train_loss", e.train_loss},
                     {"val_loss", e.val_loss}});
      }
      j["history"] = std::move(h);
    }
    folds_j.push_back(std::move(j));
  }
  auto ratios = [](const Metrics& m) {
    return nlohmann::json{{"precision", m.precision},
                          {"recall", m.recall},
                          {"f1", m.f1},
                          {"accuracy", m.accuracy},
                          {"specificity", m.specificity}};
  };
  return {{"folds", std::move(folds_j)}, {"mean", ratios(mean)}, {"std", ratios(std)}};
}

}  // namespace adlex::trainer
