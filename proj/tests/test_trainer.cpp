#include <cmath>
#include <functional>
#include <set>

#include "adlex/error.hpp"
#include "adlex/trainer.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace adlex;
using namespace adlex::trainer;
using testsupport::make;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an adlex::Error");
  return Errc::IoError;
}

PhaseSpec phase(int patience, int max_epochs, bool rlrop = false) {
  PhaseSpec p;
  p.name = "p";
  p.lr = 0.1;
  p.patience = patience;
  p.max_epochs = max_epochs;
  p.reduce_on_plateau = rlrop;
  p.rlrop_factor = 0.2;
  p.rlrop_patience = 3;
  return p;
}

// One scalar parameter, quadratic training objective, scripted validation.
struct Stub {
  Parameter w{"w", Matrix(1, 1, 0.0)};
  std::function<double(int)> script;
  int calls = 0;

  LoopHooks hooks() {
    LoopHooks h;
    h.train_example = [this](std::size_t, Rng&) {
      const double x = w.value(0, 0) - 3.0;
      w.grad(0, 0) += 2.0 * x;
      return x * x;
    };
    h.val_loss = [this] { return script(++calls); };
    h.trainable = [this] { return std::vector<Parameter*>{&w}; };
    return h;
  }
};

}  // namespace

TEST_CASE("Adam step examples") {
  Parameter p("p", Matrix(1, 1, 1.0));
  p.grad = Matrix(1, 1, 1.0);
  AdamState s;
  adam_step({&p}, s, 0.1);
  CHECK(s.step == 1);
  CHECK(p.value(0, 0) == doctest::Approx(0.9).epsilon(1e-7));

  Parameter q("q", Matrix(2, 2, 0.5));
  q.grad = Matrix(2, 2, 0.0);
  AdamState t;
  adam_step({&q}, t, 0.1);
  CHECK(q.value == Matrix(2, 2, 0.5));
  CHECK(t.step == 1);

  Parameter r("r", Matrix(3, 1, 0.0));
  r.grad = Matrix(3, 1, 0.0);
  CHECK(code_of([&] { adam_step({&r}, t, 0.1); }) == Errc::ShapeMismatch);
}

TEST_CASE("Adam matches a hand-rolled reference") {
  Parameter p("p", Matrix::from(1, 3, {0.5, -1.0, 2.0}));
  AdamState s;
  double ref[3] = {0.5, -1.0, 2.0}, m[3] = {0, 0, 0}, v[3] = {0, 0, 0};
  for (int step = 1; step <= 25; ++step) {
    for (int i = 0; i < 3; ++i) p.grad.data[i] = std::sin(step * (i + 1.0)) + ref[i];
    for (int i = 0; i < 3; ++i) {
      const double g = std::sin(step * (i + 1.0)) + ref[i];
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mh = m[i] / (1 - std::pow(0.9, step)), vh = v[i] / (1 - std::pow(0.999, step));
      ref[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    }
    adam_step({&p}, s, 0.01);
  }
  for (int i = 0; i < 3; ++i) CHECK(std::fabs(p.value.data[i] - ref[i]) < 1e-12);
}

TEST_CASE("metrics example") {
  const auto m = metrics_from_counts(3, 1, 4, 2);
  CHECK(m.precision == 0.75);
  CHECK(m.recall == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(m.accuracy == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(m.specificity == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(m.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  const auto perfect = metrics_from_predictions({0, 1, 1, 0}, {0, 1, 1, 0});
  for (double v : {perfect.precision, perfect.recall, perfect.f1, perfect.accuracy, perfect.specificity}) CHECK(v == 1.0);

  const auto all_pos = metrics_from_predictions({0, 1, 1, 0}, {1, 1, 1, 1});
  CHECK(all_pos.specificity == 0.0);
  CHECK(all_pos.recall == 1.0);

  const auto none = metrics_from_predictions({0, 0}, {0, 0});
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);
  CHECK(none.accuracy == 1.0);
}

TEST_CASE("aggregation matches a hand-computed table") {
  std::vector<Metrics> folds;
  for (double a : {0.5, 0.6, 0.7, 0.8, 0.9, 1.0}) {
    Metrics m;
    m.accuracy = a;
    m.precision = 1.0 - a;
    m.tp = 2;
    folds.push_back(m);
  }
  const auto [mean, sd] = aggregate(folds);
  CHECK(mean.accuracy == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(sd.accuracy == doctest::Approx(0.18708286933869708).epsilon(1e-13));
  CHECK(mean.precision == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(sd.precision == doctest::Approx(0.18708286933869708).epsilon(1e-13));
  CHECK(mean.tp == 12);
}

TEST_CASE("strictly decreasing validation loss never stops early") {
  Stub s;
  s.script = [](int e) { return 10.0 - e; };
  auto r = run_phases({phase(2, 15)}, 4, 2, 1e-6, 1, {&s.w}, s.hooks());
  CHECK(r.phases[0].epochs == 15);
  CHECK_FALSE(r.phases[0].early_stopped);
  CHECK(r.phases[0].best_epoch == 15);
}

TEST_CASE("constant validation loss stops at patience + 1") {
  for (int patience : {1, 3, 9}) {
    Stub s;
    s.script = [](int) { return 2.0; };
    auto r = run_phases({phase(patience, 100)}, 4, 2, 1e-6, 1, {&s.w}, s.hooks());
    CHECK(r.phases[0].epochs == patience + 1);
    CHECK(r.phases[0].early_stopped);
    CHECK(r.phases[0].best_epoch == 1);
  }
}

TEST_CASE("improvements smaller than min_delta do not reset patience") {
  Stub s;
  s.script = [](int e) { return 1.0 - 1e-8 * e; };
  auto r = run_phases({phase(3, 100)}, 2, 2, 1e-6, 1, {&s.w}, s.hooks());
  CHECK(r.phases[0].epochs == 4);
}

TEST_CASE("best weights are restored at the end of each phase") {
  Stub s;
  LoopHooks h = s.hooks();
  // real validation objective that first improves then gets worse as w passes 1
  h.val_loss = [&] { return std::pow(s.w.value(0, 0) - 1.0, 2); };
  auto r = run_phases({phase(4, 60), phase(4, 60)}, 4, 2, 1e-6, 5, {&s.w}, h);
  double best = 1e300;
  for (const auto& e : r.history) {
    if (e.phase == 1) best = std::min(best, e.val_loss);
  }
  CHECK(h.val_loss() == best);
  CHECK(r.phases[1].best_val_loss == best);
}

TEST_CASE("learning rate only drops by the configured factor") {
  Stub s;
  s.script = [](int e) { return e <= 2 ? 5.0 - e : 3.0; };
  auto r = run_phases({phase(100, 20, true)}, 4, 4, 1e-6, 2, {&s.w}, s.hooks());
  REQUIRE(r.history.size() == 20);
  int drops = 0;
  for (std::size_t i = 1; i < r.history.size(); ++i) {
    const double a = r.history[i - 1].lr, b = r.history[i].lr;
    CHECK(b <= a);
    if (b < a) {
      ++drops;
      CHECK(b == a * 0.2);
    }
  }
  CHECK(drops == 5);  // after epochs 5, 8, 11, 14, 17; the one after 20 is never used
  CHECK(r.history[5].lr == 0.1 * 0.2);  // plateau starts after epoch 2, reduction after epoch 5
  CHECK(r.history[4].lr == 0.1);
}

TEST_CASE("phase plans") {
  TrainSchedule s;
  auto stl = phase_plan(model::Architecture::Stl, s);
  REQUIRE(stl.size() == 2);
  CHECK(stl[0].lr == 1e-4);
  CHECK(stl[0].patience == 9);
  CHECK(stl[0].reduce_on_plateau);
  CHECK_FALSE(stl[0].encoder_trainable);
  CHECK(stl[1].lr == 1e-5);
  CHECK(stl[1].patience == 3);
  CHECK_FALSE(stl[1].reduce_on_plateau);
  CHECK(stl[1].encoder_trainable);

  auto siamese = phase_plan(model::Architecture::Siamese, s);
  CHECK(siamese[0].lr == 1e-3);

  auto mtl = phase_plan(model::Architecture::Mtl, s);
  REQUIRE(mtl.size() == 1);
  CHECK(mtl[0].lr == 1e-6);
  CHECK(mtl[0].patience == 8);
  CHECK(mtl[0].encoder_trainable);

  auto de = phase_plan(model::Architecture::MtlDe, s);
  REQUIRE(de.size() == 1);
  CHECK_FALSE(de[0].encoder_trainable);
}

TEST_CASE("schedule validation") {
  TrainSchedule s;
  s.rlrop_factor = 1.0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = {};
  s.es_patience_phase1 = 0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = {};
  s.phase2_lr = 0.0;
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("fit rejects empty splits") {
  const auto data = generate_synthetic(1, 2);
  model::ModelConfig mc;
  model::Classifier m(mc, model::Vocabulary::build(data), 1);
  CHECK(code_of([&] { fit(m, {}, data, {}, {}, 1); }) == Errc::EmptySplit);
  CHECK(code_of([&] { fit(m, data, {}, {}, {}, 1); }) == Errc::EmptySplit);
}

TEST_CASE("fit is deterministic and freezes the encoder in phase one") {
  const auto data = generate_synthetic(2, 6);
  Dataset train(data.begin(), data.begin() + 8), val(data.begin() + 8, data.end());
  model::ModelConfig mc;
  mc.encoder.embed_dim = 6;
  mc.hidden = 8;
  TrainSchedule s;
  s.max_epochs = 4;
  s.phase1_lr = 1e-2;
  model::Classifier a(mc, model::Vocabulary::build(train), 3), b(mc, model::Vocabulary::build(train), 3);
  const Matrix emb0 = a.parameter("encoder.embedding").value;
  s.max_epochs = 4;
  TrainSchedule p1 = s;
  p1.phase2_lr = 1e-300;  // effectively no phase-two movement
  auto ra = fit(a, train, val, p1, {}, 11);
  auto rb = fit(b, train, val, p1, {}, 11);
  CHECK(a.to_json() == b.to_json());
  REQUIRE(ra.history.size() == rb.history.size());
  for (std::size_t i = 0; i < ra.history.size(); ++i) CHECK(ra.history[i].val_loss == rb.history[i].val_loss);
  // the encoder moves only in phase two, whose step is ~0 here
  const Matrix& emb1 = a.parameter("encoder.embedding").value;
  for (std::size_t i = 0; i < emb0.size(); ++i) CHECK(std::fabs(emb1.data[i] - emb0.data[i]) < 1e-250);
  CHECK(a.parameter("head.out.W").value != model::Classifier(mc, model::Vocabulary::build(train), 3).parameter("head.out.W").value);
}

TEST_CASE("constant predictor scores the class proportion of each fold") {
  const auto data = generate_synthetic(3, 13);
  const auto plan = stratified_cv(data, 5, 1, 0.2, 4);
  for (const auto& f : plan.folds) {
    const auto test = select(data, f.test_ids);
    std::vector<int> truth, pred(test.size(), 1);
    for (const auto& t : test) truth.push_back(t.label_value());
    const auto m = metrics_from_predictions(truth, pred);
    CHECK(m.accuracy == doctest::Approx(static_cast<double>(count_label(test, Label::Dementia)) / test.size()));
  }
}

TEST_CASE("cross validation report") {
  const auto data = generate_synthetic(4, 6);
  const auto plan = stratified_cv(data, 2, 2, 0.2, 9);
  RunOptions o;
  o.model.encoder.embed_dim = 4;
  o.model.hidden = 4;
  o.schedule.max_epochs = 2;
  const auto serial = cross_validate(data, plan, o, 1);
  const auto parallel = cross_validate(data, plan, o, 4);
  REQUIRE(serial.folds.size() == 4);
  CHECK(serial.to_json().dump() == parallel.to_json().dump());
  std::set<std::uint64_t> seeds;
  for (std::size_t i = 0; i < serial.folds.size(); ++i) {
    const auto& f = serial.folds[i];
    CHECK(f.repeat == static_cast<int>(i / 2));
    CHECK(f.fold == static_cast<int>(i % 2));
    CHECK(f.seed == fold_seed(9, f.repeat, f.fold));
    seeds.insert(f.seed);
    CHECK(f.test.tp + f.test.fp + f.test.tn + f.test.fn == static_cast<long>(plan.folds[i].test_ids.size()));
  }
  CHECK(seeds.size() == 4);
  const auto j = serial.to_json(false);
  CHECK(j.contains("mean"));
  CHECK(j.contains("std"));
  CHECK_FALSE(j["folds"][0].contains("history"));
}
