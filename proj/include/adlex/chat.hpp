#pragma once

// Reader for the subset of the CHAT transcript format used by picture
// description corpora: @-headers, *-main tiers, %-dependent tiers, tab
// continuation lines, and the common annotation codes on main tiers.

#include <string>
#include <string_view>
#include <vector>

namespace adlex::chat {

struct Header {
  std::string key;        // includes the leading "@"
  std::string separator;  // ":" plus following whitespace, empty for "@Begin"
  std::string value;

  std::string line() const { return key + separator + value; }
};

struct DependentTier {
  std::string code;  // "mor", "gra", ...
  std::string text;
};

struct Tier {
  std::string speaker;  // three capital letters
  std::string separator;
  std::string raw_text;
  std::vector<DependentTier> dependent_tiers;

  std::string main_line() const { return "*" + speaker + separator + raw_text; }
};

struct ChatDocument {
  std::vector<Header> headers;
  std::vector<Tier> tiers;
};

struct CleanPolicy {
  bool drop_retracings = true;        // "<...> [//]", "word [///]"
  bool drop_repetition_marks = true;  // "word [/]"
  bool drop_fillers = true;           // "&uh", "&-um", "&+fr"
  bool drop_unintelligible = true;    // "xxx", "yyy", "www"
  bool lowercase = true;
  bool keep_terminators = true;       // ". ? !" as standalone tokens
};

// Throws Error{MalformedTier} or Error{EmptyDocument}.
ChatDocument parse_chat(std::string_view text);

std::vector<std::string> participant_utterances(const ChatDocument& doc,
                                                std::string_view speaker);

// Throws Error{UnbalancedBracket}. Unknown bracketed codes are dropped and
// reported through `warnings` (and the warn log) when given.
std::vector<std::string> clean_utterance(std::string_view raw, const CleanPolicy& policy = {},
                                         std::vector<std::string>* warnings = nullptr);

}  // namespace adlex::chat
