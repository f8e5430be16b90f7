#include "adlex/textstats.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <sstream>

#include "adlex/error.hpp"
#include "adlex/io.hpp"

namespace adlex::textstats {

WordSet parse_word_list(std::string_view text) {
  WordSet words;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    auto e = line.find_last_not_of(" \t\r");
    std::string w = line.substr(b, e - b + 1);
    for (auto& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    words.insert(std::move(w));
  }
  return words;
}

WordSet load_word_list(const std::filesystem::path& path) { return parse_word_list(io::read_file(path)); }

std::filesystem::path default_easy_words_path() {
  return std::filesystem::path(ADLEX_DATA_DIR) / "easy_words.txt";
}

bool is_word(std::string_view token) {
  bool letter = false;
  for (char c : token) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      letter = true;
    } else if (c != '\'' && c != '-') {
      return false;
    }
  }
  return letter;
}

bool is_terminator(std::string_view token) { return token == "." || token == "?" || token == "!"; }

namespace {

bool vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

// 'y' is a vowel unless it starts the word or sits between two vowels.
bool vowel_at(const std::string& w, std::size_t i) {
  if (vowel(w[i])) return true;
  if (w[i] != 'y') return false;
  if (i == 0) return false;
  if (vowel(w[i - 1]) && i + 1 < w.size() && vowel(w[i + 1])) return false;
  return true;
}

bool consonant(char c) { return !vowel(c) && c != 'y'; }

bool ends_with(const std::string& w, std::string_view suffix) {
  return w.size() >= suffix.size() && w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool starts_with(const std::string& w, std::string_view prefix) {
  return w.size() >= prefix.size() && w.compare(0, prefix.size(), prefix) == 0;
}

// Vowel pairs pronounced as two syllables ("pi-a-no", "ac-tu-al").
int hiatus_count(const std::string& w, std::size_t begin, std::size_t end) {
  int extra = 0;
  for (std::size_t k = begin; k + 1 < end; ++k) {
    const char a = w[k], b = w[k + 1];
    const char prev = k > 0 ? w[k - 1] : '\0';
    if (a == 'i' && b == 'a' && prev != 'c' && prev != 't' && prev != 's' && prev != 'g') ++extra;
    else if (a == 'i' && b == 'o' && prev != 'c' && prev != 't' && prev != 's' && prev != 'x' && prev != 'g') ++extra;
    else if (a == 'u' && b == 'a' && prev != 'q' && prev != 'g') ++extra;
    else if (a == 'u' && b == 'o' && prev != 'q') ++extra;
    else if (a == 'i' && b == 'u') ++extra;
    else if (a == 'y' && b == 'i') ++extra;
  }
  return extra;
}

}  // namespace

int count_syllables(std::string_view token) {
  std::string w;
  for (char c : token) {
    if (std::isalpha(static_cast<unsigned char>(c))) w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (w.empty()) return 0;

  std::string lowered(token);
  for (auto& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  // "didn't", "wasn't": the n't is syllabic after d/s/z.
  const int syllabic_nt = (ends_with(lowered, "dn't") || ends_with(lowered, "sn't") || ends_with(lowered, "zn't")) ? 1 : 0;

  int n = 0;
  for (std::size_t i = 0; i < w.size();) {
    if (!vowel_at(w, i)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < w.size() && vowel_at(w, j)) ++j;
    n += 1 + hiatus_count(w, i, j);
    i = j;
  }

  const std::size_t len = w.size();
  if (n > 1) {
    if (ends_with(w, "e") && len >= 3 && consonant(w[len - 2]) &&
        !(w[len - 2] == 'l' && consonant(w[len - 3]))) {
      --n;  // silent terminal e, but "table", "little" keep theirs
    } else if (ends_with(w, "es") && len >= 4 && consonant(w[len - 3]) &&
               !(ends_with(w, "ses") || ends_with(w, "xes") || ends_with(w, "zes") || ends_with(w, "ches") ||
                 ends_with(w, "shes") || ends_with(w, "ces") || ends_with(w, "ges"))) {
      --n;
    } else if (ends_with(w, "ed") && len >= 4 && (consonant(w[len - 3]) || w[len - 3] == 'y') &&
               w[len - 3] != 't' && w[len - 3] != 'd') {
      --n;
    }
  }
  if (n > 1) {
    for (std::string_view suffix : {"ful", "less", "ly", "ment", "ness"}) {
      if (!ends_with(w, suffix)) continue;
      const std::size_t e = len - suffix.size() - 1;  // index of the e before the suffix
      if (e >= 2 && w[e] == 'e' && consonant(w[e - 1]) && vowel(w[e - 2])) --n;
      break;
    }
  }
  if (n > 1 && ends_with(w, "ically")) --n;
  if (n > 1 && starts_with(w, "some") && len > 4 && consonant(w[4])) --n;
  if (n > 2 && starts_with(w, "every")) --n;
  return std::max(1, n + syllabic_nt);
}

TranscriptStats& TranscriptStats::operator+=(const TranscriptStats& o) {
  syllables += o.syllables;
  lexicon += o.lexicon;
  difficult += o.difficult;
  sentences += o.sentences;
  return *this;
}

TranscriptStats transcript_stats(std::span<const std::string> tokens, const WordSet& easy_words) {
  TranscriptStats s;
  for (const auto& tok : tokens) {
    if (is_terminator(tok)) {
      ++s.sentences;
      continue;
    }
    if (!is_word(tok)) continue;
    const int syl = count_syllables(tok);
    ++s.lexicon;
    s.syllables += syl;
    if (syl > 2) {
      std::string lower;
      for (char c : tok) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (!easy_words.count(lower)) ++s.difficult;
    }
  }
  if (!tokens.empty() && s.sentences == 0) s.sentences = 1;
  return s;
}

std::vector<GroupComparison> compare_groups(const Dataset& data, const WordSet& easy_words,
                                            stats::TTestVariant variant, double significance) {
  std::array<std::array<std::vector<double>, 2>, 4> values;
  for (const auto& t : data) {
    const auto s = transcript_stats(t.tokens(), easy_words);
    const int g = t.label_value();
    values[0][g].push_back(static_cast<double>(s.syllables));
    values[1][g].push_back(static_cast<double>(s.lexicon));
    values[2][g].push_back(static_cast<double>(s.difficult));
    values[3][g].push_back(static_cast<double>(s.sentences));
  }
  for (int g = 0; g < 2; ++g) {
    if (values[0][g].size() < 2) {
      throw Error(Errc::DegenerateGroup,
                  std::string(to_string(static_cast<Label>(g))) + " group has fewer than 2 transcripts");
    }
  }

  static const char* kNames[] = {"syllables", "lexicon", "difficult_words", "sentences"};
  std::vector<GroupComparison> rows;
  std::vector<double> pvals;
  for (int m = 0; m < 4; ++m) {
    GroupComparison row;
    row.metric = kNames[m];
    row.control_mean = stats::mean(values[m][0]);
    row.control_std = stats::sample_std(values[m][0]);
    row.dementia_mean = stats::mean(values[m][1]);
    row.dementia_std = stats::sample_std(values[m][1]);
    const auto tt = stats::t_test_independent(values[m][0], values[m][1], variant);
    row.t = tt.t;
    row.p = tt.p;
    pvals.push_back(tt.p);
    rows.push_back(row);
  }
  const auto adjusted = stats::bh_adjust(pvals);
  for (int m = 0; m < 4; ++m) {
    rows[m].p_adjusted = adjusted[m];
    rows[m].significant = adjusted[m] < significance;
  }
  return rows;
}

nlohmann::json to_json(const std::vector<GroupComparison>& rows, stats::TTestVariant variant) {
  nlohmann::json j;
  j["artifact"] = "stats";
  j["test"] = variant == stats::TTestVariant::Student ? "student" : "welch";
  auto& arr = j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"metric", r.metric},
                   {"control_mean", r.control_mean},
                   {"control_std", r.control_std},
                   {"dementia_mean", r.dementia_mean},
                   {"dementia_std", r.dementia_std},
                   {"t", std::isfinite(r.t) ? nlohmann::json(r.t) : nlohmann::json(r.t > 0 ? "inf" : "-inf")},
                   {"p", r.p},
                   {"p_adjusted", r.p_adjusted},
                   {"significant", r.significant}});
  }
  return j;
}

}  // namespace adlex::textstats
