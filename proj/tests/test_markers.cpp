#include <algorithm>
#include <cmath>
#include <functional>

#include "adlex/error.hpp"
#include "adlex/io.hpp"
#include "adlex/markers.hpp"
#include "adlex/rng.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace adlex;
using namespace adlex::markers;
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

const MarkerResult* find(const std::vector<MarkerResult>& rows, const std::string& f) {
  for (const auto& r : rows) {
    if (r.feature == f) return &r;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("lexicon tagger examples") {
  CHECK(lexicon_tag("the") == "DT");
  CHECK(lexicon_tag("watching") == "VBG");
  CHECK(lexicon_tag("forgot") == "VBD");
  CHECK(lexicon_tag("oh") == "UH");
  CHECK(lexicon_tag("she") == "PRP");
  CHECK(lexicon_tag(".") == ".");
  CHECK(is_punctuation_tag("."));
  CHECK_FALSE(is_punctuation_tag("NN"));
  const std::vector<std::string> toks = {"the", "boy", "."};
  const auto tags = lexicon_tag(toks);
  REQUIRE(tags.size() == 3);
  CHECK(tags[1].token == "boy");
}

TEST_CASE("backend names") {
  CHECK(parse_backend("lexicon") == TaggerBackend::Lexicon);
  CHECK(code_of([] { parse_backend("spacy-large"); }) == Errc::UnknownBackend);
  CHECK(parse_kind("pos") == FeatureKind::Pos);
  CHECK(parse_kind("unigram") == FeatureKind::Unigram);
}

TEST_CASE("relative frequency rows") {
  Dataset d = {make("a", "the the boy .", Label::Control), make("b", "oh the boy .", Label::Dementia)};
  const auto m = feature_matrix(d, FeatureKind::Unigram, 1);
  CHECK(m.features == std::vector<std::string>{"boy", "oh", "the"});
  REQUIRE(m.values.size() == 2);
  CHECK(m.values[0][0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(m.values[0][2] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(m.values[0][1] == 0.0);

  const auto high = feature_matrix(d, FeatureKind::Unigram, 2);
  CHECK(high.features == std::vector<std::string>{"boy", "the"});
  CHECK(high.values[1][0] == 0.5);
}

TEST_CASE("rows sum to one and excluded transcripts are reported") {
  Dataset d = generate_synthetic(4, 12);
  d.push_back(make("Z", "zebra .", Label::Control));
  for (auto kind : {FeatureKind::Unigram, FeatureKind::Pos}) {
    const auto m = feature_matrix(d, kind, 2);
    for (const auto& row : m.values) {
      double s = 0;
      for (double v : row) s += v;
      CHECK(std::fabs(s - 1.0) < 1e-12);
    }
    if (kind == FeatureKind::Unigram) {
      CHECK(m.excluded == std::vector<std::string>{"Z"});
      CHECK(m.ids.size() == d.size() - 1);
    }
  }
  CHECK(code_of([&] { feature_matrix(d, FeatureKind::Unigram, 1000); }) == Errc::NoFeatures);
}

TEST_CASE("flipping labels negates every correlation") {
  const auto d = generate_synthetic(6, 20);
  auto m = feature_matrix(d, FeatureKind::Pos, 3);
  const auto a = correlate(m, FeatureKind::Pos, 1.0);
  for (auto& l : m.labels) l = 1 - l;
  const auto b = correlate(m, FeatureKind::Pos, 1.0);
  REQUIRE(a.size() == b.size());
  for (const auto& r : a) {
    const auto* o = find(b, r.feature);
    REQUIRE(o);
    CHECK(o->r == doctest::Approx(-r.r).epsilon(1e-12));
    CHECK(o->p_adjusted == doctest::Approx(r.p_adjusted).epsilon(1e-12));
    CHECK(o->direction != r.direction);
  }
}

TEST_CASE("result set does not depend on column order") {
  const auto d = generate_synthetic(7, 20);
  auto m = feature_matrix(d, FeatureKind::Unigram, 3);
  const auto base = correlate(m, FeatureKind::Unigram, 0.05);

  std::vector<std::size_t> perm(m.features.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  Rng rng(3);
  rng.shuffle(perm);
  FeatureMatrix shuffled = m;
  for (std::size_t j = 0; j < perm.size(); ++j) {
    shuffled.features[j] = m.features[perm[j]];
    for (std::size_t i = 0; i < m.values.size(); ++i) shuffled.values[i][j] = m.values[i][perm[j]];
  }
  const auto again = correlate(shuffled, FeatureKind::Unigram, 0.05);
  REQUIRE(again.size() == base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(again[i].feature == base[i].feature);
    CHECK(again[i].r == base[i].r);
    CHECK(again[i].p_adjusted == base[i].p_adjusted);
  }
}

TEST_CASE("results are sorted and all pass the threshold") {
  const auto rows = correlate_markers(generate_synthetic(1, 39), FeatureKind::Unigram, 5, 0.05);
  REQUIRE_FALSE(rows.empty());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].p_adjusted < 0.05);
    CHECK(rows[i].p_adjusted >= rows[i].p);
    CHECK((rows[i].r < 0) == (rows[i].direction == Direction::Control));
    if (i > 0) CHECK(std::fabs(rows[i - 1].r) >= std::fabs(rows[i].r));
  }
}

TEST_CASE("synthetic POS markers point the expected way") {
  const auto rows = correlate_markers(generate_synthetic(1, 39), FeatureKind::Pos, 5, 0.05);
  for (const char* tag : {"PRP", "UH"}) {
    const auto* r = find(rows, tag);
    REQUIRE_MESSAGE(r, tag);
    CHECK(r->direction == Direction::Dementia);
  }
  for (const char* tag : {"NN", "DT"}) {
    const auto* r = find(rows, tag);
    REQUIRE_MESSAGE(r, tag);
    CHECK(r->direction == Direction::Control);
  }
}

TEST_CASE("both classes are required") {
  Dataset d = {make("a", "the boy .", Label::Control), make("b", "a girl .", Label::Control)};
  CHECK(code_of([&] { correlate_markers(d, FeatureKind::Unigram, 1, 0.05); }) == Errc::DegenerateGroup);
}

TEST_CASE("external tag sidecar") {
  testsupport::TempDir dir("markers-tags");
  io::write_file_atomic(dir / "tags.jsonl",
                        "{\"id\":\"a\",\"tags\":[[\"the\",\"DT\"],[\"boy\",\"NN\"],[\".\",\".\"]]}\n"
                        "{\"id\":\"b\",\"tags\":[[\"oh\",\"UH\"],[\"she\",\"PRP\"]]}\n");
  const auto tags = read_tags_jsonl(dir / "tags.jsonl");
  Tagger t{TaggerBackend::External, &tags};
  Dataset d = {make("a", "the boy .", Label::Control), make("b", "oh she", Label::Dementia)};
  const auto m = feature_matrix(d, FeatureKind::Pos, 1, t);
  CHECK(m.features == std::vector<std::string>{"DT", "NN", "PRP", "UH"});
  CHECK(m.values[0][0] == 0.5);

  Dataset missing = {make("c", "the boy .", Label::Control)};
  CHECK(code_of([&] { feature_matrix(missing, FeatureKind::Pos, 1, t); }) == Errc::MissingMetadata);

  io::write_file_atomic(dir / "bad.jsonl", "{\"id\":\"a\",\"tags\":[[\"the\"]]}\n");
  CHECK(code_of([&] { read_tags_jsonl(dir / "bad.jsonl"); }) == Errc::ParseError);
  Tagger no_file{TaggerBackend::External, nullptr};
  CHECK(code_of([&] { no_file.tag(d[0]); }) == Errc::UnknownBackend);
}

TEST_CASE("markers artifact schema") {
  const auto d = generate_synthetic(1, 10);
  const auto rows = correlate_markers(d, FeatureKind::Pos, 2, 0.5);
  const auto j = to_json(rows, FeatureKind::Pos, 2, 0.5, {});
  CHECK(j["artifact"] == "markers");
  CHECK(j["kind"] == "pos");
  REQUIRE(j["rows"].is_array());
  if (!rows.empty()) {
    for (const char* k : {"feature", "r", "p", "p_adjusted", "direction"}) CHECK(j["rows"][0].contains(k));
  }
}
