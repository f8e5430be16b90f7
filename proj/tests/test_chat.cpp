#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "adlex/chat.hpp"
#include "adlex/corpus.hpp"
#include "adlex/error.hpp"
#include "adlex/io.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace adlex;
using namespace adlex::chat;

namespace {

using Tokens = std::vector<std::string>;

std::string join(const Tokens& t) {
  std::string out;
  for (const auto& s : t) out += (out.empty() ? "" : " ") + s;
  return out;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an adlex::Error");
  return Errc::IoError;
}

std::vector<std::filesystem::path> fixture_files() {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(testsupport::fixtures() / "chat")) {
    if (e.path().extension() == ".cha") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

TEST_CASE("empty input has no tiers") {
  CHECK(code_of([] { parse_chat(""); }) == Errc::EmptyDocument);
  CHECK(code_of([] { parse_chat("@Begin\n@End\n"); }) == Errc::EmptyDocument);
}

TEST_CASE("single tier document") {
  auto doc = parse_chat("@Begin\n*PAR:\tthe boy .\n@End");
  REQUIRE(doc.tiers.size() == 1);
  CHECK(doc.tiers[0].speaker == "PAR");
  CHECK(doc.tiers[0].raw_text == "the boy .");
  REQUIRE(doc.headers.size() == 2);
  CHECK(doc.headers[0].key == "@Begin");
  CHECK(doc.headers[1].key == "@End");
}

TEST_CASE("dependent tiers attach to the preceding main tier") {
  auto doc = parse_chat("*PAR:\tthe boy .\n%mor:\tdet|the n|boy .\n*INV:\tokay .\n%com:\tnods\n");
  REQUIRE(doc.tiers.size() == 2);
  REQUIRE(doc.tiers[0].dependent_tiers.size() == 1);
  CHECK(doc.tiers[0].dependent_tiers[0].code == "mor");
  CHECK(doc.tiers[0].dependent_tiers[0].text == "det|the n|boy .");
  REQUIRE(doc.tiers[1].dependent_tiers.size() == 1);
  CHECK(doc.tiers[1].dependent_tiers[0].code == "com");
}

TEST_CASE("malformed lines") {
  CHECK(code_of([] { parse_chat("*PA:\tthe boy .\n"); }) == Errc::MalformedTier);
  CHECK(code_of([] { parse_chat("*par:\tthe boy .\n"); }) == Errc::MalformedTier);
  CHECK(code_of([] { parse_chat("*PAR the boy .\n"); }) == Errc::MalformedTier);
  CHECK(code_of([] { parse_chat("hello\n*PAR:\tthe boy .\n"); }) == Errc::MalformedTier);
  CHECK(code_of([] { parse_chat("%mor:\tn|boy\n*PAR:\tboy .\n"); }) == Errc::MalformedTier);
  CHECK(code_of([] { parse_chat("*PAR:\t\n"); }) == Errc::MalformedTier);
  CHECK(code_of([] { parse_chat("\tdangling\n*PAR:\tboy .\n"); }) == Errc::MalformedTier);
}

TEST_CASE("continuation lines join with a space") {
  auto doc = parse_chat("*PAR:\tthe boy\n\tis falling .\n%mor:\tdet|the\n\tn|boy\n");
  REQUIRE(doc.tiers.size() == 1);
  CHECK(doc.tiers[0].raw_text == "the boy is falling .");
  CHECK(doc.tiers[0].dependent_tiers[0].text == "det|the n|boy");
}

TEST_CASE("participant utterances keep file order") {
  auto doc = parse_chat("*PAR:\tone .\n*INV:\tokay .\n*PAR:\ttwo .\n");
  CHECK(participant_utterances(doc, "PAR") == Tokens{"one .", "two ."});
  CHECK(participant_utterances(doc, "INV") == Tokens{"okay ."});
  auto par_only = parse_chat("*PAR:\tone .\n");
  CHECK(participant_utterances(par_only, "INV").empty());
}

TEST_CASE("speaker selections are disjoint and cover every tier") {
  for (const auto& f : fixture_files()) {
    auto doc = parse_chat(io::read_file(f));
    std::size_t total = 0;
    std::set<std::string> speakers;
    for (const auto& t : doc.tiers) speakers.insert(t.speaker);
    for (const auto& s : speakers) total += participant_utterances(doc, s).size();
    CHECK(total == doc.tiers.size());
  }
}

TEST_CASE("headers and main tiers survive a re-serialization") {
  const std::string text =
      "@UTF8\n@Begin\n@Languages:\teng\n@Participants:\tPAR Participant, INV Investigator\n"
      "*INV:\tjust tell me .\n*PAR:\tthe [/] the boy &uh fell .\n%mor:\tdet|the\n@End\n";
  auto doc = parse_chat(text);
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) {
    if (!l.empty() && l[0] != '%') lines.push_back(l);
  }
  std::vector<std::string> rebuilt;
  // headers before the first tier, tiers, then the trailing @End
  for (std::size_t i = 0; i + 1 < doc.headers.size(); ++i) rebuilt.push_back(doc.headers[i].line());
  for (const auto& t : doc.tiers) rebuilt.push_back(t.main_line());
  rebuilt.push_back(doc.headers.back().line());
  CHECK(rebuilt == lines);
}

TEST_CASE("cleaning examples") {
  CHECK(clean_utterance("the boy .") == Tokens{"the", "boy", "."});
  CHECK(clean_utterance("&uh the [//] the stool .") == Tokens{"the", "stool", "."});
  CHECK(clean_utterance("he [x 3] fell [: fell down] .") == Tokens{"he", "fell", "."});
}

TEST_CASE("unbalanced brackets") {
  CHECK(code_of([] { clean_utterance("the [/ boy ."); }) == Errc::UnbalancedBracket);
  CHECK(code_of([] { clean_utterance("the ] boy ."); }) == Errc::UnbalancedBracket);
  CHECK(code_of([] { clean_utterance("<the boy [/] ."); }) == Errc::UnbalancedBracket);
  CHECK(code_of([] { clean_utterance("the boy> [/] ."); }) == Errc::UnbalancedBracket);
  CHECK(code_of([] { clean_utterance("the [: [x] boy] ."); }) == Errc::UnbalancedBracket);
}

TEST_CASE("unknown codes are dropped with a warning") {
  std::vector<std::string> warnings;
  CHECK(clean_utterance("the boy [qqq] fell .", {}, &warnings) == Tokens{"the", "boy", "fell", "."});
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("qqq") != std::string::npos);
}

TEST_CASE("policy switches are independent") {
  const std::string raw = "&uh The [/] the boy xxx fell [//] went .";
  CHECK(clean_utterance(raw) == Tokens{"the", "boy", "went", "."});

  CleanPolicy keep_fillers;
  keep_fillers.drop_fillers = false;
  CHECK(clean_utterance(raw, keep_fillers) == Tokens{"uh", "the", "boy", "went", "."});

  CleanPolicy keep_reps;
  keep_reps.drop_repetition_marks = false;
  CHECK(clean_utterance(raw, keep_reps) == Tokens{"the", "the", "boy", "went", "."});

  CleanPolicy keep_retrace;
  keep_retrace.drop_retracings = false;
  CHECK(clean_utterance(raw, keep_retrace) == Tokens{"the", "boy", "fell", "went", "."});

  CleanPolicy keep_xxx;
  keep_xxx.drop_unintelligible = false;
  CHECK(clean_utterance(raw, keep_xxx) == Tokens{"the", "boy", "xxx", "went", "."});

  CleanPolicy keep_case;
  keep_case.lowercase = false;
  CHECK(clean_utterance(raw, keep_case) == Tokens{"the", "boy", "went", "."});
  CHECK(clean_utterance("The Boy .", keep_case) == Tokens{"The", "Boy", "."});

  CleanPolicy no_terminators;
  no_terminators.keep_terminators = false;
  CHECK(clean_utterance("is it ? yes +...", no_terminators) == Tokens{"is", "it", "yes"});
}

TEST_CASE("default policy never leaves annotation debris") {
  for (const auto& f : fixture_files()) {
    auto doc = parse_chat(io::read_file(f));
    for (const auto& t : doc.tiers) {
      for (const auto& tok : clean_utterance(t.raw_text)) {
        CHECK(tok.front() != '&');
        CHECK(tok.find('[') == std::string::npos);
        CHECK(tok.find(']') == std::string::npos);
      }
    }
  }
}

TEST_CASE("cleaning is idempotent") {
  for (const auto& f : fixture_files()) {
    auto doc = parse_chat(io::read_file(f));
    for (const auto& t : doc.tiers) {
      auto once = clean_utterance(t.raw_text);
      CHECK(clean_utterance(join(once)) == once);
    }
  }
}

TEST_CASE("fixture suite matches the checked-in token streams") {
  const auto files = fixture_files();
  REQUIRE(files.size() >= 20);
  for (const auto& f : files) {
    CAPTURE(f.filename().string());
    auto expected_path = f;
    expected_path.replace_extension(".expected");
    REQUIRE(std::filesystem::exists(expected_path));
    std::vector<std::string> expected;
    std::istringstream in(io::read_file(expected_path));
    for (std::string l; std::getline(in, l);) expected.push_back(l);

    auto doc = parse_chat(io::read_file(f));
    std::vector<std::string> got;
    for (const auto& u : participant_utterances(doc, "PAR")) got.push_back(join(clean_utterance(u)));
    CHECK(got == expected);
  }
}

TEST_CASE("synthetic CHAT tree utterance counts equal the manifest") {
  testsupport::TempDir dir("chat-manifest");
  const auto data = generate_synthetic(1, 39);
  const auto manifest = write_cha_tree(data, dir.path(), 1);
  REQUIRE(manifest.size() == 78);
  for (const auto& [id, n] : manifest) {
    auto doc = parse_chat(io::read_file(dir / (id + ".cha")));
    CHECK(participant_utterances(doc, "PAR").size() == static_cast<std::size_t>(n));
  }
}
