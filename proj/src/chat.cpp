#include "adlex/chat.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

#include "adlex/error.hpp"
#include "adlex/log.hpp"

namespace adlex::chat {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::string_view trim_right(std::string_view s) {
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  return trim_right(s);
}

// Splits "KEY:<ws>VALUE" after the sigil. Returns false when there is no colon.
bool split_key(std::string_view body, std::string& key, std::string& sep, std::string& value) {
  auto colon = body.find(':');
  if (colon == std::string_view::npos) return false;
  key = std::string(body.substr(0, colon));
  std::size_t pos = colon + 1;
  while (pos < body.size() && (body[pos] == ' ' || body[pos] == '\t')) ++pos;
  sep = std::string(body.substr(colon, pos - colon));
  value = std::string(body.substr(pos));
  return true;
}

bool is_speaker_code(std::string_view s) {
  return s.size() == 3 &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
}

std::string malformed(std::size_t lineno, std::string_view what) {
  return "line " + std::to_string(lineno) + ": " + std::string(what);
}

}  // namespace

ChatDocument parse_chat(std::string_view text) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  ChatDocument doc;
  enum class Last { None, Header, Tier, Dependent } last = Last::None;
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) {
      if (end == text.size()) break;
      continue;
    }

    if (line.front() == '\t') {
      std::string cont(trim(line));
      switch (last) {
        case Last::Header: doc.headers.back().value += " " + cont; break;
        case Last::Tier: doc.tiers.back().raw_text += " " + cont; break;
        case Last::Dependent: doc.tiers.back().dependent_tiers.back().text += " " + cont; break;
        case Last::None:
          throw Error(Errc::MalformedTier, malformed(lineno, "continuation line with nothing to continue"));
      }
    } else if (line.front() == '@') {
      Header h;
      if (!split_key(line, h.key, h.separator, h.value)) h.key = std::string(trim_right(line));
      doc.headers.push_back(std::move(h));
      last = Last::Header;
    } else if (line.front() == '*') {
      Tier t;
      std::string key;
      if (!split_key(line.substr(1), key, t.separator, t.raw_text) || !is_speaker_code(key)) {
        throw Error(Errc::MalformedTier, malformed(lineno, "main tier without *XXX: prefix"));
      }
      t.speaker = std::move(key);
      doc.tiers.push_back(std::move(t));
      last = Last::Tier;
    } else if (line.front() == '%') {
      if (doc.tiers.empty()) {
        throw Error(Errc::MalformedTier, malformed(lineno, "dependent tier before any main tier"));
      }
      DependentTier d;
      std::string sep;
      if (!split_key(line.substr(1), d.code, sep, d.text)) {
        throw Error(Errc::MalformedTier, malformed(lineno, "dependent tier without %xxx: prefix"));
      }
      doc.tiers.back().dependent_tiers.push_back(std::move(d));
      last = Last::Dependent;
    } else {
      throw Error(Errc::MalformedTier, malformed(lineno, "unrecognized line"));
    }
    if (end == text.size()) break;
  }

  if (doc.tiers.empty()) throw Error(Errc::EmptyDocument, "no main tiers");
  for (const auto& t : doc.tiers) {
    if (trim(t.raw_text).empty()) {
      throw Error(Errc::MalformedTier, "empty main tier for speaker " + t.speaker);
    }
  }
  return doc;
}

std::vector<std::string> participant_utterances(const ChatDocument& doc,
                                                std::string_view speaker) {
  std::vector<std::string> out;
  for (const auto& t : doc.tiers) {
    if (t.speaker == speaker) out.push_back(t.raw_text);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Utterance cleaning

namespace {

enum class ItemKind { Word, GroupOpen, GroupClose, Code };

struct Item {
  ItemKind kind;
  std::string text;
};

std::string strip_bullets(std::string_view raw) {
  // Media bullets are delimited by U+0015 (NAK).
  std::string out;
  bool inside = false;
  for (char c : raw) {
    if (c == '\x15') {
      inside = !inside;
      out += ' ';
      continue;
    }
    if (!inside) out += c;
  }
  return out;
}

std::vector<Item> lex(std::string_view s) {
  std::vector<Item> items;
  std::size_t i = 0;
  int depth = 0;
  while (i < s.size()) {
    char c = s[i];
    if (is_space(c)) {
      ++i;
    } else if (c == '[') {
      auto close = s.find(']', i + 1);
      auto next_open = s.find('[', i + 1);
      if (close == std::string_view::npos || (next_open != std::string_view::npos && next_open < close)) {
        throw Error(Errc::UnbalancedBracket, "'[' without matching ']' in: " + std::string(s));
      }
      items.push_back({ItemKind::Code, std::string(trim(s.substr(i + 1, close - i - 1)))});
      i = close + 1;
    } else if (c == ']') {
      throw Error(Errc::UnbalancedBracket, "']' without matching '[' in: " + std::string(s));
    } else if (c == '<') {
      items.push_back({ItemKind::GroupOpen, "<"});
      ++depth;
      ++i;
    } else {
      std::size_t j = i;
      while (j < s.size() && !is_space(s[j]) && s[j] != '[' && s[j] != ']') ++j;
      std::string_view word = s.substr(i, j - i);
      std::size_t closes = 0;
      while (!word.empty() && word.back() == '>') {
        word.remove_suffix(1);
        ++closes;
      }
      if (!word.empty()) items.push_back({ItemKind::Word, std::string(word)});
      for (std::size_t k = 0; k < closes; ++k) {
        if (depth == 0) {
          throw Error(Errc::UnbalancedBracket, "'>' without matching '<' in: " + std::string(s));
        }
        --depth;
        items.push_back({ItemKind::GroupClose, ">"});
      }
      i = j;
    }
  }
  if (depth != 0) throw Error(Errc::UnbalancedBracket, "'<' without matching '>' in: " + std::string(s));
  return items;
}

struct Unit {
  std::vector<std::string> words;
  bool removed = false;
};

enum class CodeKind { Repetition, Retracing, Silent, Unknown };

CodeKind classify_code(std::string_view code) {
  if (code == "/") return CodeKind::Repetition;
  if (code == "//" || code == "///" || code == "/-" || code == "/?") return CodeKind::Retracing;
  if (code.empty()) return CodeKind::Unknown;
  // [x N], [: ...], [:: ...], [* ...], [+ ...]
  if (code.size() >= 2 && code[0] == 'x' && code[1] == ' ') return CodeKind::Silent;
  if (code[0] == ':' || code[0] == '*' || code[0] == '+') return CodeKind::Silent;
  // Explanations, paralinguistics, overlap and stress markers.
  if (code[0] == '=' || code[0] == '%' || code[0] == '^') return CodeKind::Silent;
  if (code == "!" || code == "!!" || code == "?" || code == "\"") return CodeKind::Silent;
  if (code[0] == '<' || code[0] == '>') return CodeKind::Silent;
  return CodeKind::Unknown;
}

bool is_pause(std::string_view w) {
  if (w.size() < 3 || w.front() != '(' || w.back() != ')') return false;
  auto inner = w.substr(1, w.size() - 2);
  return std::all_of(inner.begin(), inner.end(),
                     [](char c) { return c == '.' || c == ':' || std::isdigit(static_cast<unsigned char>(c)); });
}

bool is_terminator_chars(std::string_view w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) { return c == '.' || c == '?' || c == '!'; });
}

std::string terminator_for(std::string_view w) {
  if (w.find('?') != std::string_view::npos) return "?";
  if (w.find('!') != std::string_view::npos) return "!";
  return ".";
}

void emit_word(std::string_view w, const CleanPolicy& policy, std::vector<std::string>& out) {
  auto push_terminator = [&](std::string_view t) {
    if (policy.keep_terminators) out.push_back(terminator_for(t));
  };

  if (w.empty()) return;
  if (w == ",") {
    out.emplace_back(",");
    return;
  }
  if (is_terminator_chars(w)) {
    push_terminator(w);
    return;
  }
  if (w.front() == '+') {
    // Special terminators (+..., +/., +//?, +"/.) end with terminator chars;
    // anything else (+<, ++, +^, +,) is an utterance linker.
    if (w.size() > 1 && (w.back() == '.' || w.back() == '?' || w.back() == '!')) push_terminator(w);
    return;
  }
  if (is_pause(w)) return;
  if (w.front() == '&') {
    if (w.size() >= 2 && (w[1] == '=' || w[1] == '{' || w[1] == '}')) return;  // events
    if (policy.drop_fillers) return;
    w.remove_prefix(1);
    if (!w.empty() && (w.front() == '-' || w.front() == '+' || w.front() == '~')) w.remove_prefix(1);
  }
  if (w.front() == '0') return;  // omitted word

  std::string trailing_terminator;
  {
    std::size_t k = w.size();
    while (k > 0 && (w[k - 1] == '.' || w[k - 1] == '?' || w[k - 1] == '!')) --k;
    if (k < w.size() && k > 0) {
      trailing_terminator = std::string(w.substr(k));
      w = w.substr(0, k);
    }
  }
  bool trailing_comma = false;
  if (w.size() > 1 && w.back() == ',') {
    trailing_comma = true;
    w.remove_suffix(1);
  }

  std::string word;
  for (std::size_t k = 0; k < w.size(); ++k) {
    char c = w[k];
    if (c == '@') break;  // special form marker, e.g. "gonna@i"
    if (c == '(' || c == ')' || c == ':' || c == '^' || c == '~') continue;
    if (c == '+' || c == '_') {
      c = ' ';
    }
    word += policy.lowercase ? static_cast<char>(std::tolower(static_cast<unsigned char>(c))) : c;
  }

  std::size_t pos = 0;
  while (pos < word.size()) {
    while (pos < word.size() && word[pos] == ' ') ++pos;
    std::size_t e = pos;
    while (e < word.size() && word[e] != ' ') ++e;
    if (e > pos) {
      std::string part = word.substr(pos, e - pos);
      bool unintelligible = part == "xxx" || part == "yyy" || part == "www";
      if (!(unintelligible && policy.drop_unintelligible)) out.push_back(std::move(part));
    }
    pos = e;
  }
  if (trailing_comma) out.emplace_back(",");
  if (!trailing_terminator.empty()) push_terminator(trailing_terminator);
}

}  // namespace

std::vector<std::string> clean_utterance(std::string_view raw, const CleanPolicy& policy,
                                         std::vector<std::string>* warnings) {
  const std::string text = strip_bullets(raw);
  const std::vector<Item> items = lex(text);

  std::vector<Unit> units;
  std::vector<std::size_t> open_groups;  // index into units where a group starts
  std::optional<std::size_t> group_unit;  // outermost open group's unit
  for (const auto& item : items) {
    switch (item.kind) {
      case ItemKind::Word:
        if (group_unit) {
          units[*group_unit].words.push_back(item.text);
        } else {
          units.push_back({{item.text}, false});
        }
        break;
      case ItemKind::GroupOpen:
        if (!group_unit) {
          units.push_back({});
          group_unit = units.size() - 1;
        }
        open_groups.push_back(*group_unit);
        break;
      case ItemKind::GroupClose:
        open_groups.pop_back();
        if (open_groups.empty()) group_unit.reset();
        break;
      case ItemKind::Code: {
        CodeKind kind = classify_code(item.text);
        bool remove_prev = (kind == CodeKind::Repetition && policy.drop_repetition_marks) ||
                           (kind == CodeKind::Retracing && policy.drop_retracings);
        if (kind == CodeKind::Unknown) {
          std::string msg = "dropping unknown code [" + item.text + "]";
          log::warn(msg);
          if (warnings) warnings->push_back(std::move(msg));
        }
        if (remove_prev && group_unit) {
          auto& words = units[*group_unit].words;
          if (!words.empty()) words.pop_back();
        } else if (remove_prev && !units.empty()) {
          units.back().removed = true;
        }
        break;
      }
    }
  }

  std::vector<std::string> out;
  for (const auto& u : units) {
    if (u.removed) continue;
    for (const auto& w : u.words) emit_word(w, policy, out);
  }
  return out;
}

}  // namespace adlex::chat
