#pragma once

// Russenorsk vocabulary: entry model, JSON (de)serialization, validation,
// queries, synonym grouping and origin statistics.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rusnor/error.hpp"
#include "rusnor/text.hpp"

namespace rusnor::lexicon {

enum class Origin { Russian, Norwegian, Dutch, LowGerman, HighGerman, English, Dual, Unknown };

inline constexpr std::array kAllOrigins = {Origin::Russian,    Origin::Norwegian, Origin::Dutch,
                                           Origin::LowGerman,  Origin::HighGerman, Origin::English,
                                           Origin::Dual,       Origin::Unknown};

enum class PartOfSpeech {
  Noun,
  Verb,
  Adjective,
  Adverb,
  Pronoun,
  Preposition,
  Particle,
  Interjection,
  Numeral,
  Phrase,
  Other
};

inline constexpr std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::Russian: return "russian";
    case Origin::Norwegian: return "norwegian";
    case Origin::Dutch: return "dutch";
    case Origin::LowGerman: return "low_german";
    case Origin::HighGerman: return "high_german";
    case Origin::English: return "english";
    case Origin::Dual: return "dual";
    case Origin::Unknown: return "unknown";
  }
  return "unknown";
}

inline constexpr std::string_view to_string(PartOfSpeech p) {
  switch (p) {
    case PartOfSpeech::Noun: return "noun";
    case PartOfSpeech::Verb: return "verb";
    case PartOfSpeech::Adjective: return "adjective";
    case PartOfSpeech::Adverb: return "adverb";
    case PartOfSpeech::Pronoun: return "pronoun";
    case PartOfSpeech::Preposition: return "preposition";
    case PartOfSpeech::Particle: return "particle";
    case PartOfSpeech::Interjection: return "interjection";
    case PartOfSpeech::Numeral: return "numeral";
    case PartOfSpeech::Phrase: return "phrase";
    case PartOfSpeech::Other: return "other";
  }
  return "other";
}

namespace detail {

// Lowercase ASCII with spaces, hyphens and slashes collapsed to '_'.
inline std::string tag_key(std::string_view raw) {
  std::string key;
  for (char ch : text::trim(raw)) {
    const auto c = static_cast<unsigned char>(ch);
    if (c == ' ' || c == '-' || c == '/' || c == '+' || c == '_') {
      if (!key.empty() && key.back() != '_') key.push_back('_');
    } else if (c != '.') {
      key.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  while (!key.empty() && key.back() == '_') key.pop_back();
  return key;
}

}  // namespace detail

/// Parses an origin label. Returns nullopt for labels outside the enumeration.
inline std::optional<Origin> parse_origin(std::string_view raw) {
  static const std::map<std::string, Origin, std::less<>> table = {
      {"russian", Origin::Russian},         {"ru", Origin::Russian},
      {"norwegian", Origin::Norwegian},     {"no", Origin::Norwegian},
      {"dutch", Origin::Dutch},             {"low_german", Origin::LowGerman},
      {"lowgerman", Origin::LowGerman},     {"high_german", Origin::HighGerman},
      {"highgerman", Origin::HighGerman},   {"german", Origin::HighGerman},
      {"english", Origin::English},         {"dual", Origin::Dual},
      {"russian_norwegian", Origin::Dual},  {"norwegian_russian", Origin::Dual},
      {"unknown", Origin::Unknown},         {"", Origin::Unknown}};
  const auto it = table.find(detail::tag_key(raw));
  if (it == table.end()) return std::nullopt;
  return it->second;
}

inline std::optional<PartOfSpeech> parse_pos(std::string_view raw) {
  static const std::map<std::string, PartOfSpeech, std::less<>> table = {
      {"noun", PartOfSpeech::Noun},
      {"n", PartOfSpeech::Noun},
      {"verb", PartOfSpeech::Verb},
      {"v", PartOfSpeech::Verb},
      {"adjective", PartOfSpeech::Adjective},
      {"adj", PartOfSpeech::Adjective},
      {"adverb", PartOfSpeech::Adverb},
      {"adv", PartOfSpeech::Adverb},
      {"pronoun", PartOfSpeech::Pronoun},
      {"pron", PartOfSpeech::Pronoun},
      {"preposition", PartOfSpeech::Preposition},
      {"prep", PartOfSpeech::Preposition},
      {"particle", PartOfSpeech::Particle},
      {"interjection", PartOfSpeech::Interjection},
      {"intj", PartOfSpeech::Interjection},
      {"numeral", PartOfSpeech::Numeral},
      {"num", PartOfSpeech::Numeral},
      {"phrase", PartOfSpeech::Phrase},
      {"other", PartOfSpeech::Other}};
  const auto it = table.find(detail::tag_key(raw));
  if (it == table.end()) return std::nullopt;
  return it->second;
}

struct LexiconEntry {
  std::string form;
  std::vector<std::string> variants;
  std::optional<std::string> cyrillic;
  std::optional<std::string> gloss_en;
  std::optional<std::string> gloss_no;
  std::optional<std::string> gloss_ru;
  PartOfSpeech pos = PartOfSpeech::Other;
  Origin origin = Origin::Unknown;
  std::optional<std::string> comment;
  std::optional<std::string> example_rn;
  std::optional<std::string> example_no;
  std::optional<std::string> example_ru;
  std::optional<std::string> page_ref;
  std::optional<std::string> source_link;
  std::optional<std::string> ipa;

  friend bool operator==(const LexiconEntry&, const LexiconEntry&) = default;
};

/// Non-fatal issue found while parsing, e.g. an unrecognized key.
struct ParseWarning {
  std::size_t index;
  std::string message;
};

namespace detail {

inline const std::set<std::string, std::less<>>& known_keys() {
  static const std::set<std::string, std::less<>> keys = {
      "form",    "variants",   "cyrillic",   "gloss_en",   "gloss_no", "gloss_ru",
      "pos",     "origin",     "comment",    "example_rn", "example_no", "example_ru",
      "page_ref", "link",      "ipa"};
  return keys;
}

inline std::optional<std::string> optional_string(const nlohmann::json& record, std::size_t index,
                                                  const char* key) {
  const auto it = record.find(key);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ValidationError(index, key, "expected a string");
  auto value = text::trim(it->get<std::string>());
  if (value.empty()) return std::nullopt;
  return value;
}

inline void append_note(std::optional<std::string>& comment, const std::string& note) {
  if (comment && comment->find(note) != std::string::npos) return;
  comment = comment ? *comment + "; " + note : note;
}

inline LexiconEntry parse_entry(const nlohmann::json& record, std::size_t index,
                                std::vector<ParseWarning>* warnings) {
  if (!record.is_object()) throw ValidationError(index, "<record>", "expected an object");

  LexiconEntry e;
  const auto form = optional_string(record, index, "form");
  if (!form) throw ValidationError(index, "form", "must be a non-empty string");
  e.form = *form;

  if (const auto it = record.find("variants"); it != record.end() && !it->is_null()) {
    if (!it->is_array()) throw ValidationError(index, "variants", "expected an array of strings");
    std::set<std::string> seen{text::fold_case(e.form)};
    for (const auto& v : *it) {
      if (!v.is_string()) throw ValidationError(index, "variants", "expected an array of strings");
      auto variant = text::trim(v.get<std::string>());
      if (variant.empty()) throw ValidationError(index, "variants", "empty variant");
      if (!seen.insert(text::fold_case(variant)).second) {
        throw ValidationError(index, "variants", "duplicate spelling '" + variant + "'");
      }
      e.variants.push_back(std::move(variant));
    }
  }

  e.cyrillic = optional_string(record, index, "cyrillic");
  e.gloss_en = optional_string(record, index, "gloss_en");
  e.gloss_no = optional_string(record, index, "gloss_no");
  e.gloss_ru = optional_string(record, index, "gloss_ru");
  e.comment = optional_string(record, index, "comment");
  e.example_rn = optional_string(record, index, "example_rn");
  e.example_no = optional_string(record, index, "example_no");
  e.example_ru = optional_string(record, index, "example_ru");
  e.page_ref = optional_string(record, index, "page_ref");
  e.source_link = optional_string(record, index, "link");
  e.ipa = optional_string(record, index, "ipa");

  const auto pos = optional_string(record, index, "pos");
  if (!pos) throw ValidationError(index, "pos", "required");
  if (auto parsed = parse_pos(*pos)) {
    e.pos = *parsed;
  } else {
    e.pos = PartOfSpeech::Other;
    append_note(e.comment, "pos: " + *pos);
  }

  if (const auto origin = optional_string(record, index, "origin")) {
    if (auto parsed = parse_origin(*origin)) {
      e.origin = *parsed;
    } else {
      e.origin = Origin::Unknown;
      append_note(e.comment, "origin: " + *origin);
    }
  }

  if (e.example_rn && !e.example_no && !e.example_ru) {
    throw ValidationError(index, "example_rn", "example without a Norwegian or Russian translation");
  }

  if (warnings != nullptr) {
    for (const auto& [key, value] : record.items()) {
      if (!known_keys().contains(key)) {
        warnings->push_back({index, "unknown key '" + key + "'"});
      }
    }
  }
  return e;
}

}  // namespace detail

/// Parses a vocabulary document (top-level JSON array of entry objects).
///
/// Throws ParseError for malformed JSON, ValidationError for schema
/// violations and DuplicateEntryError when two records share form and
/// part of speech. Unknown keys are reported through `warnings`.
inline std::vector<LexiconEntry> parse_lexicon(std::string_view document,
                                               std::vector<ParseWarning>* warnings = nullptr) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!root.is_array()) throw ValidationError(0, "<root>", "expected a top-level array");

  std::vector<LexiconEntry> entries;
  entries.reserve(root.size());
  std::map<std::pair<std::string, PartOfSpeech>, std::size_t> seen;
  for (std::size_t i = 0; i < root.size(); ++i) {
    auto entry = detail::parse_entry(root[i], i, warnings);
    auto [it, inserted] = seen.emplace(std::pair{entry.form, entry.pos}, i);
    if (!inserted) {
      throw DuplicateEntryError(it->second, i,
                                entry.form + "/" + std::string(to_string(entry.pos)));
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

inline nlohmann::ordered_json to_json(const LexiconEntry& e) {
  nlohmann::ordered_json j;
  j["form"] = e.form;
  j["variants"] = e.variants;
  auto put = [&j](const char* key, const std::optional<std::string>& v) {
    if (v) j[key] = *v;
  };
  put("cyrillic", e.cyrillic);
  put("gloss_en", e.gloss_en);
  put("gloss_no", e.gloss_no);
  put("gloss_ru", e.gloss_ru);
  j["pos"] = to_string(e.pos);
  j["origin"] = to_string(e.origin);
  put("comment", e.comment);
  put("example_rn", e.example_rn);
  put("example_no", e.example_no);
  put("example_ru", e.example_ru);
  put("page_ref", e.page_ref);
  put("link", e.source_link);
  put("ipa", e.ipa);
  return j;
}

inline std::string serialize_lexicon(const std::vector<LexiconEntry>& entries) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& e : entries) arr.push_back(to_json(e));
  return arr.dump(2, ' ', false) + "\n";
}

// ---------------------------------------------------------------------------
// Queries

struct QueryFilter {
  std::optional<Origin> origin;
  std::optional<PartOfSpeech> pos;
  std::optional<std::string> form_contains;   ///< matched against form and variants
  std::optional<std::string> gloss_contains;  ///< matched against any gloss
};

/// True when `word` names the entry through its form or one of its variants.
inline bool names_entry(const LexiconEntry& e, std::string_view word) {
  const auto key = text::fold_for_lookup(word);
  if (text::fold_for_lookup(e.form) == key) return true;
  return std::any_of(e.variants.begin(), e.variants.end(),
                     [&](const std::string& v) { return text::fold_for_lookup(v) == key; });
}

inline std::vector<LexiconEntry> query(const std::vector<LexiconEntry>& entries,
                                       const QueryFilter& filter) {
  const auto form_needle =
      filter.form_contains ? std::optional(text::fold_for_lookup(*filter.form_contains)) : std::nullopt;
  const auto gloss_needle =
      filter.gloss_contains ? std::optional(text::fold_for_lookup(*filter.gloss_contains)) : std::nullopt;
  auto contains = [](const std::string& hay, const std::string& needle) {
    return text::fold_for_lookup(hay).find(needle) != std::string::npos;
  };

  std::vector<LexiconEntry> out;
  for (const auto& e : entries) {
    if (filter.origin && e.origin != *filter.origin) continue;
    if (filter.pos && e.pos != *filter.pos) continue;
    if (form_needle) {
      bool hit = contains(e.form, *form_needle);
      for (const auto& v : e.variants) hit = hit || contains(v, *form_needle);
      if (!hit) continue;
    }
    if (gloss_needle) {
      bool hit = false;
      for (const auto* g : {&e.gloss_en, &e.gloss_no, &e.gloss_ru}) {
        hit = hit || (*g && contains(**g, *gloss_needle));
      }
      if (!hit) continue;
    }
    out.push_back(e);
  }
  return out;
}

/// Entries whose form or variant equals `word` under diacritic-insensitive lookup.
inline std::vector<LexiconEntry> lookup(const std::vector<LexiconEntry>& entries,
                                        std::string_view word) {
  std::vector<LexiconEntry> out;
  for (const auto& e : entries) {
    if (names_entry(e, word)) out.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synonym groups

enum class OriginProfile { SingleOrigin, DualOrigin, Mixed };

inline constexpr std::string_view to_string(OriginProfile p) {
  switch (p) {
    case OriginProfile::SingleOrigin: return "single_origin";
    case OriginProfile::DualOrigin: return "dual_origin";
    case OriginProfile::Mixed: return "mixed";
  }
  return "mixed";
}

struct SynonymGroup {
  std::string concept_key;
  std::vector<std::size_t> members;  ///< indices into the grouped entry list
  OriginProfile origin_profile = OriginProfile::Mixed;
};

/// Concept key for an English gloss: case-folded, punctuation removed,
/// whitespace collapsed, one leading article or "to" dropped.
inline std::string normalize_gloss(std::string_view gloss) {
  const auto folded = text::to_u32(text::fold_case(gloss));
  std::vector<std::string> words;
  std::u32string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(text::from_u32(current));
    current.clear();
  };
  for (char32_t c : folded) {
    if (text::is_alnum(c) || c == U'\'') {
      if (c != U'\'') current.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  if (words.size() > 1 &&
      (words[0] == "a" || words[0] == "an" || words[0] == "the" || words[0] == "to")) {
    words.erase(words.begin());
  }
  std::string key;
  for (const auto& w : words) {
    if (!key.empty()) key.push_back(' ');
    key += w;
  }
  return key;
}

inline OriginProfile classify_origins(const std::vector<LexiconEntry>& entries,
                                      const std::vector<std::size_t>& members) {
  bool russian = false, norwegian = false, uniform = true;
  for (std::size_t m : members) {
    russian = russian || entries[m].origin == Origin::Russian;
    norwegian = norwegian || entries[m].origin == Origin::Norwegian;
    uniform = uniform && entries[m].origin == entries[members.front()].origin;
  }
  if (russian && norwegian) return OriginProfile::DualOrigin;
  if (uniform) return OriginProfile::SingleOrigin;
  return OriginProfile::Mixed;
}

/// Groups entries sharing a normalized English gloss. Groups are emitted in
/// order of their first member; singletons and gloss-less entries are dropped.
inline std::vector<SynonymGroup> group_synonyms(const std::vector<LexiconEntry>& entries) {
  std::vector<SynonymGroup> groups;
  std::map<std::string, std::size_t> by_key;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!entries[i].gloss_en) continue;
    auto key = normalize_gloss(*entries[i].gloss_en);
    if (key.empty()) continue;
    auto [it, inserted] = by_key.emplace(key, groups.size());
    if (inserted) groups.push_back({std::move(key), {}, OriginProfile::Mixed});
    groups[it->second].members.push_back(i);
  }
  std::erase_if(groups, [](const SynonymGroup& g) { return g.members.size() < 2; });
  for (auto& g : groups) g.origin_profile = classify_origins(entries, g.members);
  return groups;
}

// ---------------------------------------------------------------------------
// Origin statistics

struct OriginHistogram {
  std::array<std::size_t, kAllOrigins.size()> counts{};

  std::size_t operator[](Origin o) const { return counts[static_cast<std::size_t>(o)]; }
  std::size_t& operator[](Origin o) { return counts[static_cast<std::size_t>(o)]; }
  std::size_t total() const {
    std::size_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }
  friend bool operator==(const OriginHistogram&, const OriginHistogram&) = default;
};

inline OriginHistogram origin_stats(const std::vector<LexiconEntry>& entries) {
  OriginHistogram h;
  for (const auto& e : entries) ++h[e.origin];
  return h;
}

}  // namespace rusnor::lexicon
