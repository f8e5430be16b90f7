// Synthetic picture-description transcripts. Control texts lean on
// determiners, nouns and gerunds ("the boy is reaching for the cookie jar");
// dementia texts lean on pronouns, past-tense verbs, interjections and
// adverbs, often opening with "and" ("and oh she dropped it here").

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>

#include "adlex/corpus.hpp"
#include "adlex/io.hpp"
#include "adlex/rng.hpp"

namespace adlex {
namespace {

using Words = std::vector<std::string>;

const Words kDeterminers = {"the", "the", "the", "a"};
const Words kNouns = {"boy",   "girl",   "cookie", "jar",     "stool",   "mother", "woman",
                      "sink",  "water",  "dish",   "plate",   "window",  "curtain", "kitchen",
                      "floor", "cupboard", "counter", "towel", "lady",   "picture", "yard"};
const Words kGerunds = {"reaching", "falling", "drying",   "washing", "standing", "stepping",
                        "looking",  "running", "spilling", "holding", "tipping",  "wiping",
                        "taking",   "climbing", "splashing", "grabbing"};
const Words kAdjectives = {"little", "young", "open", "tall", "wet", "full"};
const Words kPrepositions = {"for", "on", "in", "into", "from", "with", "at", "under"};
const Words kDifficultGerunds = {"overflowing", "balancing", "daydreaming", "motioning"};
const Words kDifficultNouns = {"cabinet", "reflection"};
const Words kDifficultAdjectives = {"precarious", "oblivious"};

const Words kPronouns = {"he", "she", "it", "they", "i", "you", "them", "him", "we", "me"};
const Words kPast = {"was",  "were", "forgot", "did",  "started", "fell", "dropped", "gave",
                     "pushed", "went", "saw",   "said", "wanted",  "got",  "took",    "came"};
const Words kInterjections = {"oh", "well", "yeah", "mhm", "okay"};
const Words kAdverbs = {"here", "now", "just", "maybe", "probably", "down", "apparently", "really", "again"};

Words concat(std::initializer_list<const Words*> lists) {
  std::set<std::string> s;
  for (const auto* l : lists) s.insert(l->begin(), l->end());
  return Words(s.begin(), s.end());
}

Words control_sentence(Rng& rng, double difficult_rate) {
  Words s;
  const bool difficult = rng.bernoulli(difficult_rate);
  const int difficult_slot = difficult ? static_cast<int>(rng.uniform_int(0, 2)) : -1;
  auto noun_phrase = [&](bool allow_adj) {
    s.push_back(rng.pick(kDeterminers));
    if (difficult_slot == 2 && allow_adj) {
      s.push_back(rng.pick(kDifficultAdjectives));
    } else if (allow_adj && rng.bernoulli(0.3)) {
      s.push_back(rng.pick(kAdjectives));
    }
    s.push_back(rng.pick(kNouns));
  };
  noun_phrase(true);
  s.push_back("is");
  s.push_back(difficult_slot == 0 ? rng.pick(kDifficultGerunds) : rng.pick(kGerunds));
  switch (rng.uniform_int(0, 3)) {
    case 0:
      break;
    case 1:
      noun_phrase(false);
      break;
    case 2:
      s.push_back(rng.pick(kPrepositions));
      noun_phrase(false);
      break;
    default:
      s.push_back(rng.pick(kPrepositions));
      noun_phrase(false);
      s.push_back(rng.pick(kNouns));
      break;
  }
  if (difficult_slot == 1) {
    s.push_back(rng.pick(kPrepositions));
    s.push_back("the");
    s.push_back(rng.pick(kDifficultNouns));
  }
  s.push_back(".");
  return s;
}

Words dementia_sentence(Rng& rng, double and_rate, double difficult_rate) {
  Words s;
  if (rng.bernoulli(and_rate)) s.push_back("and");
  switch (rng.uniform_int(0, 6)) {
    case 0:
      s.insert(s.end(), {rng.pick(kPronouns), rng.pick(kPast), rng.pick(kPronouns), rng.pick(kAdverbs)});
      break;
    case 1:
      s.insert(s.end(), {rng.pick(kInterjections), rng.pick(kPronouns), rng.pick(kPast), rng.pick(kAdverbs)});
      break;
    case 2:
      s.insert(s.end(), {rng.pick(kInterjections), rng.pick(kPronouns), rng.pick(kPast)});
      break;
    case 3:
      s.insert(s.end(), {rng.pick(kPronouns), rng.pick(kPast), "the", rng.pick(kNouns), rng.pick(kAdverbs)});
      break;
    case 4:
      s.insert(s.end(), {rng.pick(kInterjections), rng.pick(kInterjections)});
      break;
    case 5:
      s.insert(s.end(), {"i", "don't", "know"});
      break;
    default:
      s.insert(s.end(), {rng.pick(kPronouns), rng.pick(kPast), rng.pick(kAdverbs), rng.pick(kAdverbs)});
      break;
  }
  if (rng.bernoulli(difficult_rate)) s.push_back("apparently");
  s.push_back(rng.bernoulli(0.15) ? "?" : ".");
  return s;
}

std::string format_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "S%03d", index);
  return buf;
}

}  // namespace

const std::vector<std::string>& control_lexicon() {
  static const Words lex =
      concat({&kGerunds, &kDifficultGerunds, &kDifficultNouns, &kDifficultAdjectives});
  return lex;
}

const std::vector<std::string>& dementia_lexicon() {
  static const Words lex = concat({&kPronouns, &kPast, &kInterjections, &kAdverbs});
  return lex;
}

Dataset generate_synthetic(std::uint64_t seed, int n_per_class, const SynthProfile& profile) {
  const std::set<std::string> ctl(control_lexicon().begin(), control_lexicon().end());
  const std::set<std::string> dem(dementia_lexicon().begin(), dementia_lexicon().end());
  const Rng root = Rng(seed).derive("synthetic");

  Dataset out;
  int index = 1;
  for (int label = 0; label < 2; ++label) {
    const bool dementia = label == 1;
    for (int i = 0; i < n_per_class; ++i, ++index) {
      Rng rng = root.derive(static_cast<std::uint64_t>(label)).derive(static_cast<std::uint64_t>(i));
      Words tokens;
      for (int attempt = 0;; ++attempt) {
        tokens.clear();
        const auto n_sentences = rng.uniform_int(profile.min_sentences, profile.max_sentences);
        const double cross = rng.uniform(0.0, profile.cross_style_max);
        for (std::int64_t s = 0; s < n_sentences; ++s) {
          const bool own_style = !rng.bernoulli(cross);
          const bool dementia_style = own_style == dementia;
          Words sentence = dementia_style
                               ? dementia_sentence(rng, profile.and_initial_rate,
                                                   dementia ? profile.difficult_rate_dementia : 0.0)
                               : control_sentence(rng, dementia ? profile.difficult_rate_dementia
                                                                : profile.difficult_rate_control);
          tokens.insert(tokens.end(), sentence.begin(), sentence.end());
        }
        int n_ctl = 0, n_dem = 0;
        for (const auto& t : tokens) {
          n_ctl += ctl.count(t) ? 1 : 0;
          n_dem += dem.count(t) ? 1 : 0;
        }
        const int margin = dementia ? n_dem - n_ctl : n_ctl - n_dem;
        if (margin >= profile.separation_margin || attempt >= 1000) break;
      }
      std::optional<int> mmse;
      if (!rng.bernoulli(profile.mmse_missing_rate)) {
        mmse = static_cast<int>(dementia ? rng.uniform_int(5, 26) : rng.uniform_int(26, 30));
      }
      out.emplace_back(format_id(index), std::move(tokens), static_cast<Label>(label), mmse);
    }
  }
  return out;
}

std::map<std::string, int> write_cha_tree(const Dataset& data, const std::filesystem::path& dir,
                                          std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  const Rng root = Rng(seed).derive("cha");
  std::map<std::string, int> manifest;
  std::string meta = "id,label,mmse\n";

  for (std::size_t idx = 0; idx < data.size(); ++idx) {
    const auto& t = data[idx];
    Rng rng = root.derive(static_cast<std::uint64_t>(idx));
    std::string out;
    out += "@UTF8\n@Begin\n@Languages:\teng\n";
    out += "@Participants:\tPAR Participant, INV Investigator\n";
    out += "@ID:\teng|Synth|PAR|||||Participant|||\n";
    out += "@ID:\teng|Synth|INV|||||Investigator|||\n";
    out += "@Media:\t" + t.id() + ", audio\n";
    out += "*INV:\tjust tell me what you see happening in the picture .\n";

    std::vector<std::string> sentence;
    int n_tiers = 0;
    auto flush = [&](const std::string& terminator) {
      std::string line = "*PAR:\t";
      std::size_t width = line.size();
      auto append = [&](const std::string& piece) {
        if (width > 60) {
          line += "\n\t";
          width = 1;
        } else if (line.back() != '\t') {
          line += ' ';
          ++width;
        }
        line += piece;
        width += piece.size();
      };
      if (rng.bernoulli(0.15)) append("&-uh");
      for (const auto& w : sentence) {
        std::string word = w == "i" ? "I" : w;
        if (rng.bernoulli(0.08)) append("&-um");
        if (rng.bernoulli(0.06)) {
          append(word);
          append("[/]");
        } else if (rng.bernoulli(0.04)) {
          append(word);
          append("[//]");
        }
        append(word);
        if (rng.bernoulli(0.05)) append("(.)");
      }
      if (!terminator.empty()) append(terminator);
      out += line + "\n";
      ++n_tiers;
      if (rng.bernoulli(0.2)) out += rng.bernoulli(0.5) ? "*INV:\tmhm .\n" : "*INV:\tanything else ?\n";
      sentence.clear();
    };
    for (const auto& tok : t.tokens()) {
      if (tok == "." || tok == "?" || tok == "!") {
        flush(tok);
      } else {
        sentence.push_back(tok);
      }
    }
    if (!sentence.empty()) flush("");
    out += "@End\n";

    io::write_file_atomic(dir / (t.id() + ".cha"), out);
    manifest[t.id()] = n_tiers;
    meta += t.id() + "," + std::to_string(t.label_value()) + "," + (t.mmse() ? std::to_string(*t.mmse()) : "") + "\n";
  }

  io::write_file_atomic(dir / "meta.csv", meta);
  nlohmann::json m(manifest);
  io::write_file_atomic(dir / "manifest.json", io::dump(m));
  return manifest;
}

}  // namespace adlex
