#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "adlex/corpus.hpp"
#include "adlex/stats.hpp"
#include "json.hpp"

namespace adlex::textstats {

using WordSet = std::unordered_set<std::string>;

// One lowercase word per line; blank lines and "#" comments skipped.
WordSet load_word_list(const std::filesystem::path& path);
WordSet parse_word_list(std::string_view text);
std::filesystem::path default_easy_words_path();

// True for tokens made of letters (plus inner apostrophes/hyphens) with at
// least one letter.
bool is_word(std::string_view token);

bool is_terminator(std::string_view token);

// Vowel-group syllable heuristic; 0 for tokens without letters.
int count_syllables(std::string_view word);

struct TranscriptStats {
  long syllables = 0;
  long lexicon = 0;
  long difficult = 0;
  long sentences = 0;

  TranscriptStats& operator+=(const TranscriptStats& o);
  friend bool operator==(const TranscriptStats&, const TranscriptStats&) = default;
};

TranscriptStats transcript_stats(std::span<const std::string> tokens, const WordSet& easy_words);

struct GroupComparison {
  std::string metric;
  double control_mean = 0.0;
  double control_std = 0.0;
  double dementia_mean = 0.0;
  double dementia_std = 0.0;
  double t = 0.0;
  double p = 1.0;
  double p_adjusted = 1.0;
  bool significant = false;
};

// Rows in fixed order: syllables, lexicon, difficult_words, sentences.
// Throws DegenerateGroup when a class has fewer than two transcripts.
std::vector<GroupComparison> compare_groups(const Dataset& data, const WordSet& easy_words,
                                            stats::TTestVariant variant = stats::TTestVariant::Student,
                                            double significance = 0.05);

nlohmann::json to_json(const std::vector<GroupComparison>& rows, stats::TTestVariant variant);

}  // namespace adlex::textstats
