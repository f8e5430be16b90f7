#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "adlex/error.hpp"
#include "adlex/rng.hpp"
#include "adlex/lime.hpp"
#include "adlex/trainer.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace adlex;
using namespace adlex::lime;

namespace {

using Tokens = std::vector<std::string>;

// Mask with the first `on` of m bits set.
Mask prefix_mask(std::size_t m, std::size_t on) {
  Mask x(m, 0);
  for (std::size_t i = 0; i < on; ++i) x[i] = 1;
  return x;
}

BatchPredict linear_bow(const std::map<std::string, double>& coef, double bias) {
  return [coef, bias](const std::vector<Tokens>& texts) {
    std::vector<double> out;
    for (const auto& t : texts) {
      const std::set<std::string> present(t.begin(), t.end());
      double p = bias;
      for (const auto& w : present) {
        auto it = coef.find(w);
        if (it != coef.end()) p += it->second;
      }
      out.push_back(p);
    }
    return out;
  };
}

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (i + j) / 2.0;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i] / n;
    mb += rb[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("unique features keep first-occurrence order") {
  const Tokens t = {"the", "boy", "the", ".", "boy", "fell"};
  CHECK(unique_features(t) == Tokens{"the", "boy", ".", "fell"});
}

TEST_CASE("kernel examples") {
  CHECK(kernel_weight(prefix_mask(4, 4)) == 1.0);
  CHECK(cosine_distance(prefix_mask(4, 2)) == doctest::Approx(1.0 - std::sqrt(2.0) / 2.0).epsilon(1e-15));
  CHECK(kernel_weight(prefix_mask(4, 2)) == doctest::Approx(0.99986).epsilon(1e-5));
  CHECK(cosine_distance(prefix_mask(4, 0)) == 1.0);
  for (std::size_t m : {3u, 7u, 20u}) {
    for (std::size_t on = m; on > 0; --on) CHECK(kernel_weight(prefix_mask(m, on - 1)) < kernel_weight(prefix_mask(m, on)));
  }
  CHECK_THROWS_AS(kernel_weight(prefix_mask(3, 1), 0.0), Error);
}

TEST_CASE("perturbation contract") {
  const Tokens t = {"the", "boy", "the", "cookie", "jar", "."};
  const auto p = perturb(t, 300, 42);
  REQUIRE(p.masks.size() == 300);
  CHECK(p.features.size() == 5);
  CHECK(p.texts[0] == t);
  CHECK(p.masks[0] == prefix_mask(5, 5));
  for (std::size_t i = 1; i < p.masks.size(); ++i) {
    std::size_t off = 0;
    for (auto b : p.masks[i]) off += b ? 0 : 1;
    CHECK(off >= 1);
    Tokens expect;
    for (const auto& tok : t) {
      const auto f = std::find(p.features.begin(), p.features.end(), tok) - p.features.begin();
      if (p.masks[i][static_cast<std::size_t>(f)]) expect.push_back(tok);
    }
    CHECK(p.texts[i] == expect);
  }
  const auto q = perturb(t, 300, 42);
  CHECK(q.masks == p.masks);
  // the first rows do not depend on how many samples were requested
  const auto longer = perturb(t, 600, 42);
  for (std::size_t i = 0; i < 300; ++i) CHECK(longer.masks[i] == p.masks[i]);
  CHECK(perturb(t, 300, 43).masks != p.masks);
}

TEST_CASE("surrogate recovers a linear model on an orthogonal design") {
  const std::size_t m = 5;
  const std::vector<double> coef = {0.3, -0.2, 0.05, 0.0, -0.4};
  const double bias = 0.1;
  std::vector<Mask> X;
  std::vector<double> y, w;
  for (std::size_t r = 0; r < (1u << m); ++r) {
    Mask row(m);
    double v = bias;
    for (std::size_t j = 0; j < m; ++j) {
      row[j] = (r >> j) & 1u;
      v += coef[j] * row[j];
    }
    X.push_back(row);
    y.push_back(v);
    w.push_back(1.0);
  }
  const auto s = fit_surrogate(X, y, w, m, 1.0);
  REQUIRE(s.features.size() == m);
  // centered columns have weighted sum of squares n / 4, so ridge scales each
  // coefficient by (n/4) / (n/4 + lambda)
  const double shrink = (32.0 / 4.0) / (32.0 / 4.0 + 1.0);
  for (std::size_t a = 0; a < m; ++a) CHECK(std::fabs(s.weights[a] / shrink - coef[s.features[a]]) < 1e-6);

  const auto unpenalized = fit_surrogate(X, y, w, m, 0.0);
  for (std::size_t a = 0; a < m; ++a) CHECK(std::fabs(unpenalized.weights[a] - coef[unpenalized.features[a]]) < 1e-9);
  CHECK(std::fabs(unpenalized.intercept - bias) < 1e-9);

  const auto top2 = fit_surrogate(X, y, w, 2, 1.0);
  CHECK(std::set<std::size_t>(top2.features.begin(), top2.features.end()) == std::set<std::size_t>{0, 4});
}

TEST_CASE("constant model gives zero weights") {
  const Tokens t = {"a", "b", "c", "d"};
  const auto p = perturb(t, 200, 1);
  std::vector<double> y(200, 0.37), w;
  for (const auto& mk : p.masks) w.push_back(kernel_weight(mk));
  const auto s = fit_surrogate(p.masks, y, w, 4);
  for (double v : s.weights) CHECK(std::fabs(v) < 1e-12);
  CHECK(std::fabs(s.intercept - 0.37) < 1e-12);
}

TEST_CASE("a doubled weight equals a duplicated row") {
  Rng rng(5);
  std::vector<Mask> X;
  std::vector<double> y, w;
  for (int i = 0; i < 40; ++i) {
    Mask r(6);
    for (auto& b : r) b = rng.bernoulli(0.5) ? 1 : 0;
    X.push_back(r);
    y.push_back(rng.uniform());
    w.push_back(rng.uniform(0.5, 1.0));
  }
  auto X2 = X;
  auto y2 = y;
  auto w2 = w;
  X2.push_back(X[7]);
  y2.push_back(y[7]);
  w2.push_back(w[7]);
  auto wd = w;
  wd[7] *= 2.0;
  const auto a = fit_surrogate(X2, y2, w2, 6), b = fit_surrogate(X, y, wd, 6);
  CHECK(a.features == b.features);
  for (std::size_t i = 0; i < a.weights.size(); ++i) CHECK(std::fabs(a.weights[i] - b.weights[i]) < 1e-12);
  CHECK(std::fabs(a.intercept - b.intercept) < 1e-12);
}

TEST_CASE("surrogate input validation") {
  std::vector<Mask> X = {prefix_mask(3, 3), prefix_mask(3, 1)};
  std::vector<double> y = {1, 0}, w = {1, 1};
  CHECK_THROWS_AS(fit_surrogate(X, y, w, 3), Error);  // needs n_keep + 1 rows
  std::vector<double> short_y = {1};
  CHECK_THROWS_AS(fit_surrogate(X, short_y, w, 1), Error);
}

TEST_CASE("explanations of a linear bag-of-words model") {
  const std::map<std::string, double> coef = {{"she", 0.12}, {"uh", 0.09}, {"forgot", 0.06}, {"it", 0.03},
                                              {"the", -0.02}, {"boy", -0.05}, {"cookie", -0.08},
                                              {"reaching", -0.11}, {"jar", 0.0}, {"stool", 0.015}};
  const Tokens t = {"the", "boy", "uh", "she", "forgot", "the", "cookie", "jar", "it", "reaching", "stool", "."};
  Options o;
  o.seed = 17;
  o.n_features_keep = 11;
  const auto e = explain(linear_bow(coef, 0.5), "X", t, o);
  CHECK(e.n_samples == 5000);
  std::vector<double> got, want;
  for (const auto& tw : e.tokens) {
    got.push_back(tw.weight);
    want.push_back(coef.count(tw.token) ? coef.at(tw.token) : 0.0);
  }
  CHECK(got.size() == 11);
  CHECK(spearman(got, want) > 0.9);
  CHECK(e.prob == doctest::Approx(0.5 + 0.12 + 0.09 + 0.06 + 0.03 - 0.02 - 0.05 - 0.08 - 0.11 + 0.015));

  const auto again = explain(linear_bow(coef, 0.5), "X", t, o);
  CHECK(again.to_json().dump() == e.to_json().dump());
  o.threads = 3;
  o.chunk = 100;
  CHECK(explain(linear_bow(coef, 0.5), "X", t, o).to_json().dump() == e.to_json().dump());
}

TEST_CASE("explanation JSON and HTML") {
  const Tokens t = {"she", "forgot", "the", "cookie"};
  Options o;
  o.n_samples = 100;
  o.seed = 3;
  const auto e = explain(linear_bow({{"she", 0.2}, {"cookie", -0.2}}, 0.5), "S001", t, o);
  const auto j = e.to_json();
  for (const char* k : {"id", "prob", "tokens", "seed", "n_samples"}) CHECK(j.contains(k));
  CHECK(j["tokens"][0].contains("token"));
  CHECK(j["tokens"][0].contains("weight"));
  const auto html = to_html(e, t);
  CHECK(html.find("<html") != std::string::npos);
  CHECK(html.find("cookie") != std::string::npos);
}

TEST_CASE("trained siamese explanations favour the generator lexicons") {
  const auto data = generate_synthetic(1, 39);
  const auto plan = stratified_cv(data, 2, 1, 0.2, 1);
  const auto& f = plan.folds[0];
  trainer::RunOptions o;
  o.model.architecture = model::Architecture::Siamese;
  o.schedule.max_epochs = 100;
  const std::set<std::string> dem(dementia_lexicon().begin(), dementia_lexicon().end());
  const std::set<std::string> ctl(control_lexicon().begin(), control_lexicon().end());

  // dementia-lexicon tokens among each explanation's top 10 should mostly push
  // toward dementia; pooled over three training seeds since one run is noisy
  int agree = 0, total = 0, ctl_agree = 0, ctl_total = 0;
  for (std::uint64_t seed : {7u, 8u, 9u}) {
    const auto m = trainer::train_model(select(data, f.train_ids), select(data, f.val_ids), o, seed);
    BatchPredict predict = [&](const std::vector<Tokens>& texts) {
      std::vector<double> out;
      for (const auto& t : texts) out.push_back(m.predict_tokens(t));
      return out;
    };
    for (const auto& t : select(data, f.test_ids)) {
      Options lo;
      lo.seed = 1;
      lo.threads = 4;
      const auto e = explain(predict, t.id(), t.tokens(), lo);
      for (const auto& tw : e.tokens) {
        if (dem.count(tw.token)) {
          ++total;
          agree += tw.weight > 0;
        } else if (ctl.count(tw.token)) {
          ++ctl_total;
          ctl_agree += tw.weight < 0;
        }
      }
    }
  }
  MESSAGE("dementia lexicon positive " << agree << "/" << total << ", control lexicon negative " << ctl_agree << "/"
                                       << ctl_total);
  REQUIRE(total >= 20);
  CHECK(static_cast<double>(agree) / total >= 0.8);
}
