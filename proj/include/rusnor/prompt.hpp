#pragma once

// Prompt assembly for the hypothesis-discovery steps and for reconstruction
// translation, plus splitting of model answers into hypothesis items.

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <regex>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rusnor/bundled_data.hpp"
#include "rusnor/error.hpp"
#include "rusnor/lexicon.hpp"
#include "rusnor/text.hpp"

namespace rusnor::agent {

class PromptError : public Error {
 public:
  using Error::Error;
};

enum class Task { OriginHypotheses, PhonMorphHypotheses, GrammarHypotheses, Translate };
enum class LanguageContext { Russenorsk, FictitiousPidgin };
enum class Direction { RuToRn, NoToRn, RnToRu, RnToNo };

inline constexpr std::array kAllDirections = {Direction::RuToRn, Direction::NoToRn,
                                              Direction::RnToRu, Direction::RnToNo};

inline constexpr std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::RuToRn: return "ru2rn";
    case Direction::NoToRn: return "no2rn";
    case Direction::RnToRu: return "rn2ru";
    case Direction::RnToNo: return "rn2no";
  }
  return "ru2rn";
}

inline std::optional<Direction> parse_direction(std::string_view s) {
  for (auto d : kAllDirections) {
    if (to_string(d) == s) return d;
  }
  return std::nullopt;
}

inline constexpr std::string_view to_string(Task t) {
  switch (t) {
    case Task::OriginHypotheses: return "origin";
    case Task::PhonMorphHypotheses: return "phonmorph";
    case Task::GrammarHypotheses: return "grammar";
    case Task::Translate: return "translate";
  }
  return "translate";
}

inline std::optional<Task> parse_task(std::string_view s) {
  for (auto t : {Task::OriginHypotheses, Task::PhonMorphHypotheses, Task::GrammarHypotheses,
                 Task::Translate}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

inline constexpr bool translates_into_russenorsk(Direction d) {
  return d == Direction::RuToRn || d == Direction::NoToRn;
}

inline constexpr std::string_view source_language_name(Direction d) {
  switch (d) {
    case Direction::RuToRn: return "Russian";
    case Direction::NoToRn: return "Norwegian";
    default: return "Russenorsk";
  }
}

inline constexpr std::string_view target_language_name(Direction d) {
  switch (d) {
    case Direction::RnToRu: return "Russian";
    case Direction::RnToNo: return "Norwegian";
    default: return "Russenorsk";
  }
}

struct PromptBundle {
  Task task = Task::OriginHypotheses;
  bool include_lexicon = false;
  bool include_examples = false;
  bool include_rules = false;
  LanguageContext language_context = LanguageContext::Russenorsk;
  std::optional<Direction> direction;
  std::optional<std::string> source_text;
};

/// Resources a bundle may draw on. Spans must outlive the call.
struct PromptResources {
  std::optional<std::span<const lexicon::LexiconEntry>> lexicon;
  std::optional<std::span<const std::string>> examples;
  std::optional<std::string> rules;
  bool full_lexicon = false;  ///< render every field instead of compact lines
};

struct AssembledPrompt {
  std::string system;
  std::string user;
  friend bool operator==(const AssembledPrompt&, const AssembledPrompt&) = default;
};

/// Replacement names used when the language is presented as an invented pidgin.
struct FictitiousNames {
  static constexpr std::string_view pidgin = "Velmorish";
  static constexpr std::string_view first_lexifier = "Kartanic";
  static constexpr std::string_view second_lexifier = "Ostrelian";
};

/// Prompt templates. Placeholders: {{rules}}, {{lexicon}}, {{examples}},
/// {{source}}, {{source_language}}, {{target_language}}.
struct PromptTemplates {
  std::string system;
  std::string origin;
  std::string phon_morph;
  std::string grammar;
  std::string translate;

  const std::string& for_task(Task t) const {
    switch (t) {
      case Task::OriginHypotheses: return origin;
      case Task::PhonMorphHypotheses: return phon_morph;
      case Task::GrammarHypotheses: return grammar;
      case Task::Translate: return translate;
    }
    return translate;
  }
};

/// Drops leading "//" header lines from a template file.
inline std::string strip_template_header(std::string_view tpl) {
  while (tpl.starts_with("//")) {
    const auto nl = tpl.find('\n');
    tpl = nl == std::string_view::npos ? std::string_view{} : tpl.substr(nl + 1);
  }
  return std::string(tpl);
}

inline const PromptTemplates& default_templates() {
  static const PromptTemplates t{strip_template_header(bundled::template_system),
                                 strip_template_header(bundled::template_origin),
                                 strip_template_header(bundled::template_phonmorph),
                                 strip_template_header(bundled::template_grammar),
                                 strip_template_header(bundled::template_translate)};
  return t;
}

/// Substitutes every {{name}} placeholder. Unknown placeholders are an error.
inline std::string render_template(std::string_view tpl,
                                   const std::vector<std::pair<std::string, std::string>>& values) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tpl.size()) {
    const auto open = tpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tpl.substr(pos));
      break;
    }
    const auto close = tpl.find("}}", open + 2);
    if (close == std::string_view::npos) throw PromptError("unterminated placeholder in template");
    out.append(tpl.substr(pos, open - pos));
    const auto name = tpl.substr(open + 2, close - open - 2);
    const auto it = std::find_if(values.begin(), values.end(),
                                 [&](const auto& kv) { return kv.first == name; });
    if (it == values.end()) throw PromptError("unknown placeholder {{" + std::string(name) + "}}");
    out.append(it->second);
    pos = close + 2;
  }
  return out;
}

inline constexpr std::size_t kCommentLimit = 120;

namespace detail {

inline std::string truncate_chars(std::string_view s, std::size_t limit) {
  const auto u = text::to_u32(s);
  if (u.size() <= limit) return std::string(s);
  return text::from_u32(std::u32string_view(u).substr(0, limit)) + "...";
}

// Case-insensitive (ASCII) replacement of every occurrence of `from`.
inline std::string replace_word(std::string_view s, std::string_view from, std::string_view to) {
  auto lower = [](std::string_view v) {
    std::string r(v);
    for (auto& c : r) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return r;
  };
  const auto hay = lower(s);
  const auto needle = lower(from);
  std::string out;
  std::size_t pos = 0;
  for (auto hit = hay.find(needle); hit != std::string::npos; hit = hay.find(needle, pos)) {
    out.append(s.substr(pos, hit - pos));
    out.append(to);
    pos = hit + needle.size();
  }
  out.append(s.substr(pos));
  return out;
}

}  // namespace detail

/// One line per entry: form, variants, part of speech, origin, glosses and a
/// truncated comment. `full` adds every remaining field untruncated.
inline std::string render_lexicon(std::span<const lexicon::LexiconEntry> entries, bool full = false) {
  std::ostringstream os;
  for (const auto& e : entries) {
    os << e.form;
    if (!e.variants.empty()) {
      os << " (";
      for (std::size_t i = 0; i < e.variants.size(); ++i) os << (i ? ", " : "") << e.variants[i];
      os << ")";
    }
    os << " [" << lexicon::to_string(e.pos) << "; " << lexicon::to_string(e.origin) << "]";
    std::string glosses;
    for (const auto* g : {&e.gloss_en, &e.gloss_no, &e.gloss_ru}) {
      if (!*g) continue;
      if (!glosses.empty()) glosses += " / ";
      glosses += **g;
    }
    if (!glosses.empty()) os << " = " << glosses;
    if (e.comment) os << "; note: " << (full ? *e.comment : detail::truncate_chars(*e.comment, kCommentLimit));
    if (full) {
      if (e.cyrillic) os << "; cyrillic: " << *e.cyrillic;
      if (e.example_rn) os << "; example: " << *e.example_rn;
      if (e.example_no) os << " | " << *e.example_no;
      if (e.example_ru) os << " | " << *e.example_ru;
      if (e.ipa) os << "; ipa: " << *e.ipa;
    }
    os << "\n";
  }
  return os.str();
}

/// Builds the system and user text for `bundle`.
///
/// Resource sections appear as rules, dictionary, examples, then the task
/// instruction and the source text. With the fictitious-pidgin context every
/// language name in the final text is replaced by an invented one.
inline AssembledPrompt assemble_prompt(const PromptBundle& bundle, const PromptResources& resources,
                                       const PromptTemplates& templates = default_templates()) {
  const bool translate = bundle.task == Task::Translate;
  if (translate && (!bundle.direction || !bundle.source_text)) {
    throw PromptError("a translation prompt needs a direction and a source text");
  }
  if (!translate && (bundle.direction || bundle.source_text)) {
    throw PromptError("hypothesis prompts take no direction or source text");
  }
  if (bundle.include_lexicon && !resources.lexicon) throw PromptError("lexicon requested but not supplied");
  if (bundle.include_examples && !resources.examples) throw PromptError("examples requested but not supplied");
  if (bundle.include_rules && !resources.rules) throw PromptError("rules requested but not supplied");
  if (bundle.language_context == LanguageContext::FictitiousPidgin && bundle.include_lexicon) {
    throw PromptError("the fictitious-pidgin context cannot include the Russenorsk lexicon");
  }

  std::string rules, lexicon_section, examples, source;
  if (bundle.include_rules) {
    rules = "### Rules and hypotheses\n" + *resources.rules;
    if (!rules.ends_with('\n')) rules += '\n';
    rules += '\n';
  }
  if (bundle.include_lexicon) {
    lexicon_section = "### Dictionary\n" + render_lexicon(*resources.lexicon, resources.full_lexicon) + "\n";
  }
  if (bundle.include_examples) {
    examples = "### Example sentences\n";
    for (const auto& ex : *resources.examples) examples += ex + "\n";
    examples += "\n";
  }
  std::string source_language, target_language;
  if (translate) {
    source_language = source_language_name(*bundle.direction);
    target_language = target_language_name(*bundle.direction);
    source = "### Source (" + source_language + ")\n" + *bundle.source_text + "\n";
  }

  const std::vector<std::pair<std::string, std::string>> values = {
      {"rules", rules},   {"lexicon", lexicon_section},         {"examples", examples},
      {"source", source}, {"source_language", source_language}, {"target_language", target_language}};
  AssembledPrompt prompt{render_template(templates.system, values),
                         render_template(templates.for_task(bundle.task), values)};

  if (bundle.language_context == LanguageContext::FictitiousPidgin) {
    for (auto* part : {&prompt.system, &prompt.user}) {
      *part = detail::replace_word(*part, "Russenorsk", FictitiousNames::pidgin);
      *part = detail::replace_word(*part, "Russian", FictitiousNames::first_lexifier);
      *part = detail::replace_word(*part, "Norwegian", FictitiousNames::second_lexifier);
    }
  }
  return prompt;
}

/// Splits a model answer into hypothesis items. Numbered or bulleted list
/// markers start items and unmarked lines continue the current one; text
/// without any marker is split into paragraphs.
inline std::vector<std::string> extract_hypotheses(std::string_view response_text) {
  static const std::regex marker(R"(^\s*(?:\d+[.)]|[-*]|•)\s+)");
  static const std::regex heading(R"(^\s*#{1,6}\s)");
  std::vector<std::string> lines;
  {
    std::string line;
    std::istringstream is{std::string(response_text)};
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  }

  std::vector<std::string> items;
  auto push = [&items](std::string s) {
    s = text::trim(s);
    if (!s.empty()) items.push_back(std::move(s));
  };

  const bool listed = std::any_of(lines.begin(), lines.end(),
                                  [](const std::string& l) { return std::regex_search(l, marker); });
  std::string current;
  bool in_list = false;  // prose before the first marker is a preamble
  for (const auto& line : lines) {
    std::smatch m;
    if (std::regex_search(line, heading)) {
      push(std::exchange(current, {}));
      in_list = false;
    } else if (listed && std::regex_search(line, m, marker)) {
      push(std::exchange(current, {}));
      current = m.suffix().str();
      in_list = true;
    } else if (text::trim(line).empty()) {
      if (!listed) push(std::exchange(current, {}));
    } else if (listed && !in_list) {
      continue;
    } else {
      if (!current.empty()) current += ' ';
      current += text::trim(line);
    }
  }
  push(std::move(current));
  return items;
}

}  // namespace rusnor::agent
