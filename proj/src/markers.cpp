#include "adlex/markers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <unordered_map>

#include "adlex/error.hpp"
#include "adlex/io.hpp"
#include "adlex/stats.hpp"
#include "adlex/textstats.hpp"

namespace adlex::markers {

const char* to_string(FeatureKind k) { return k == FeatureKind::Unigram ? "unigram" : "pos"; }
const char* to_string(Direction d) { return d == Direction::Control ? "control" : "dementia"; }

FeatureKind parse_kind(const std::string& s) {
  if (s == "unigram" || s == "unigrams") return FeatureKind::Unigram;
  if (s == "pos") return FeatureKind::Pos;
  throw Error(Errc::UsageError, "unknown feature kind '" + s + "' (expected unigram or pos)");
}

TaggerBackend parse_backend(const std::string& s) {
  if (s == "lexicon" || s == "builtin") return TaggerBackend::Lexicon;
  if (s == "external" || s == "sidecar") return TaggerBackend::External;
  throw Error(Errc::UnknownBackend, "unknown tagger backend '" + s + "'");
}

namespace {

const std::unordered_map<std::string, std::string>& lexicon() {
  static const auto* table = [] {
    auto* m = new std::unordered_map<std::string, std::string>;
    auto add = [&](const char* tag, std::initializer_list<const char*> words) {
      for (const char* w : words) (*m)[w] = tag;
    };
    add("PRP", {"i", "you", "he", "she", "it", "we", "they", "me", "him", "us", "them", "myself",
                "yourself", "himself", "herself", "itself", "themselves", "ourselves"});
    add("PRP$", {"my", "your", "his", "her", "its", "our", "their"});
    add("DT", {"the", "a", "an", "this", "that", "these", "those", "some", "any", "no", "every", "each",
               "another", "all", "both", "either", "neither"});
    add("IN", {"in", "on", "at", "of", "with", "by", "for", "from", "into", "onto", "over", "under",
               "about", "around", "behind", "near", "through", "off", "like", "if", "because", "while",
               "than", "outside", "inside", "across", "against", "toward", "towards", "underneath",
               "beside", "between", "after", "before", "during", "without", "upon"});
    add("TO", {"to"});
    add("CC", {"and", "or", "but", "nor", "plus"});
    add("UH", {"oh", "uh", "um", "well", "yeah", "yes", "mhm", "okay", "ok", "hmm", "ah", "wow", "huh",
               "yep", "nope", "gosh", "alright"});
    add("RB", {"here", "there", "now", "just", "maybe", "probably", "down", "up", "out", "again", "really",
               "very", "too", "also", "not", "then", "still", "so", "even", "away", "back", "perhaps",
               "never", "always", "already", "quite", "almost", "else", "soon", "once", "anyway",
               "apparently", "actually", "sometimes", "together", "somewhere", "anyhow", "rather",
               "ever", "only", "much"});
    add("VBZ", {"is", "has", "does", "'s", "says", "goes", "seems", "looks"});
    add("VBP", {"are", "am", "have", "do", "'re", "'ve", "'m"});
    add("VB", {"be", "go", "get", "see", "say", "know", "think", "make", "take", "come", "give", "look",
               "want", "tell", "let", "keep"});
    add("VBN", {"been", "gone", "seen", "done", "taken", "given", "known", "broken", "fallen"});
    add("VBD", {"was", "were", "had", "did", "forgot", "fell", "went", "saw", "said", "got", "took", "came",
                "gave", "ran", "made", "knew", "thought", "told", "found", "left", "felt", "kept", "stood",
                "sat", "began", "broke", "brought", "bought", "caught", "held", "heard", "meant", "put",
                "set", "spilt", "threw", "wrote", "drank", "ate", "sang", "swam", "tore"});
    add("MD", {"can", "could", "will", "would", "should", "may", "might", "must", "shall", "'ll", "'d"});
    add("WP", {"what", "who", "whom", "which"});
    add("WRB", {"where", "when", "why", "how"});
    add("JJ", {"big", "small", "little", "tall", "short", "old", "young", "good", "bad", "wet", "dry", "full",
               "empty", "open", "dirty", "clean", "high", "low", "other", "nice", "same", "different",
               "sure", "new", "whole", "long", "happy", "sad", "pretty", "busy", "hot", "cold"});
    add("NN", {"thing", "something", "nothing", "everything", "anything", "ceiling", "morning", "evening",
               "king", "ring", "string", "building", "painting", "bed", "shed", "sled"});
    add("NNS", {"dishes", "glasses", "clothes", "news"});
    return m;
  }();
  return *table;
}

bool ends_with(const std::string& w, std::string_view s) {
  return w.size() >= s.size() && w.compare(w.size() - s.size(), s.size(), s) == 0;
}

bool all_digits(const std::string& w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

}  // namespace

std::string lexicon_tag(const std::string& token) {
  if (token == "." || token == "?" || token == "!") return ".";
  if (token == ",") return ",";
  if (all_digits(token)) return "CD";
  if (!textstats::is_word(token)) return "SYM";

  std::string w;
  for (char c : token) w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const auto& lex = lexicon();
  if (auto it = lex.find(w); it != lex.end()) return it->second;

  // Contractions take the tag of their host ("don't" -> VBP, "she's" -> PRP).
  if (auto apos = w.find('\''); apos != std::string::npos && apos > 0) {
    std::string host = w.substr(0, apos);
    if (ends_with(w, "n't")) {
      host = w.substr(0, w.size() - 3);
      if (host == "ca") return "MD";
      if (host == "wo" || host == "sha") return "MD";
    }
    if (auto it = lex.find(host); it != lex.end()) return it->second;
    return "NN";
  }

  if (w.size() > 4 && ends_with(w, "ing")) return "VBG";
  if (w.size() > 3 && ends_with(w, "ed")) return "VBD";
  if (w.size() > 3 && ends_with(w, "ly")) return "RB";
  if (w.size() > 4 && (ends_with(w, "ous") || ends_with(w, "ful") || ends_with(w, "ive") ||
                       ends_with(w, "able") || ends_with(w, "ish"))) {
    return "JJ";
  }
  if (w.size() > 3 && ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us") && !ends_with(w, "is")) {
    return "NNS";
  }
  return "NN";
}

std::vector<TaggedToken> lexicon_tag(std::span<const std::string> tokens) {
  std::vector<TaggedToken> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back({t, lexicon_tag(t)});
  return out;
}

ExternalTags read_tags_jsonl(const std::filesystem::path& path) {
  ExternalTags out;
  for (const auto& j : io::read_jsonl(path)) {
    try {
      const auto id = j.at("id").get<std::string>();
      std::vector<TaggedToken> tags;
      for (const auto& pair : j.at("tags")) {
        if (!pair.is_array() || pair.size() != 2) throw Error(Errc::ParseError, "tag entries must be [token, tag]");
        TaggedToken tt{pair[0].get<std::string>(), pair[1].get<std::string>()};
        if (tt.token.empty() || tt.tag.empty()) throw Error(Errc::ParseError, "empty token or tag in " + id);
        tags.push_back(std::move(tt));
      }
      if (!out.emplace(id, std::move(tags)).second) throw Error(Errc::DuplicateId, "duplicate tags for " + id);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::ParseError, path.string() + ": " + e.what());
    }
  }
  return out;
}

std::vector<TaggedToken> Tagger::tag(const Transcript& t) const {
  if (backend == TaggerBackend::Lexicon) return lexicon_tag(t.tokens());
  if (!external) throw Error(Errc::UnknownBackend, "external backend needs a tags file");
  auto it = external->find(t.id());
  if (it == external->end()) throw Error(Errc::MissingMetadata, "no external tags for " + t.id());
  return it->second;
}

bool is_punctuation_tag(const std::string& tag) {
  return tag.empty() || !std::isalpha(static_cast<unsigned char>(tag[0]));
}

FeatureMatrix feature_matrix(const Dataset& data, FeatureKind kind, int min_doc_freq, const Tagger& tagger) {
  if (data.empty()) throw Error(Errc::NoFeatures, "empty dataset");
  std::vector<std::map<std::string, double>> counts(data.size());
  std::map<std::string, int> doc_freq;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto& c = counts[i];
    if (kind == FeatureKind::Unigram) {
      for (const auto& tok : data[i].tokens()) {
        if (textstats::is_word(tok)) c[tok] += 1.0;
      }
    } else {
      for (const auto& tt : tagger.tag(data[i])) {
        if (!is_punctuation_tag(tt.tag) && tt.tag != "SYM" && tt.tag != "CD") c[tt.tag] += 1.0;
      }
    }
    for (const auto& [f, n] : c) ++doc_freq[f];
  }

  FeatureMatrix m;
  std::unordered_map<std::string, std::size_t> column;
  for (const auto& [f, df] : doc_freq) {
    if (df >= min_doc_freq) {
      column[f] = m.features.size();
      m.features.push_back(f);
    }
  }
  if (m.features.empty()) throw Error(Errc::NoFeatures, "no feature reaches the document-frequency threshold");

  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<double> row(m.features.size(), 0.0);
    double total = 0.0;
    for (const auto& [f, n] : counts[i]) {
      auto it = column.find(f);
      if (it == column.end()) continue;
      row[it->second] = n;
      total += n;
    }
    if (total == 0.0) {
      m.excluded.push_back(data[i].id());
      continue;
    }
    for (auto& v : row) v /= total;
    m.ids.push_back(data[i].id());
    m.labels.push_back(data[i].label_value());
    m.values.push_back(std::move(row));
  }
  if (m.values.empty()) throw Error(Errc::NoFeatures, "every transcript lacks counted features");
  return m;
}

std::vector<MarkerResult> correlate(const FeatureMatrix& m, FeatureKind kind, double alpha) {
  const std::size_t n = m.values.size();
  const std::size_t f = m.features.size();
  std::vector<MarkerResult> all(f);
  std::vector<double> pvals(f);
  std::vector<double> col(n);
  for (std::size_t j = 0; j < f; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = m.values[i][j];
    const auto pb = stats::point_biserial(col, m.labels);
    all[j].feature = m.features[j];
    all[j].kind = kind;
    all[j].r = pb.r;
    all[j].p = pb.p;
    all[j].direction = pb.r < 0.0 ? Direction::Control : Direction::Dementia;
    pvals[j] = pb.p;
  }
  const auto adj = stats::bh_adjust(pvals);
  std::vector<MarkerResult> kept;
  for (std::size_t j = 0; j < f; ++j) {
    all[j].p_adjusted = adj[j];
    if (adj[j] < alpha) kept.push_back(all[j]);
  }
  std::sort(kept.begin(), kept.end(), [](const MarkerResult& a, const MarkerResult& b) {
    const double ra = std::fabs(a.r), rb = std::fabs(b.r);
    if (ra != rb) return ra > rb;
    return a.feature < b.feature;
  });
  return kept;
}

std::vector<MarkerResult> correlate_markers(const Dataset& data, FeatureKind kind, int min_doc_freq,
                                            double alpha, const Tagger& tagger) {
  if (count_label(data, Label::Control) == 0 || count_label(data, Label::Dementia) == 0) {
    throw Error(Errc::DegenerateGroup, "both classes must be present");
  }
  return correlate(feature_matrix(data, kind, min_doc_freq, tagger), kind, alpha);
}

nlohmann::json to_json(const std::vector<MarkerResult>& rows, FeatureKind kind, int min_doc_freq, double alpha,
                       const std::vector<std::string>& excluded) {
  nlohmann::json j;
  j["artifact"] = "markers";
  j["kind"] = to_string(kind);
  j["min_doc_freq"] = min_doc_freq;
  j["alpha"] = alpha;
  j["excluded"] = excluded;
  auto& arr = j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"feature", r.feature},
                   {"r", r.r},
                   {"abs_r", std::fabs(r.r)},
                   {"p", r.p},
                   {"p_adjusted", r.p_adjusted},
                   {"direction", to_string(r.direction)}});
  }
  return j;
}

}  // namespace adlex::markers
