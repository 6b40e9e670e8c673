#pragma once

// Ordered grapheme rewrite system producing candidate Russenorsk forms from
// Norwegian or (romanized) Russian source words, with derivation traces.

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "rusnor/bundled_data.hpp"
#include "rusnor/error.hpp"
#include "rusnor/lexicon.hpp"
#include "rusnor/text.hpp"

namespace rusnor::transducer {

static_assert(sizeof(wchar_t) == sizeof(char32_t),
              "rule patterns are matched with std::wregex over UTF-32");

using lexicon::PartOfSpeech;

enum class SourceLanguage { Norwegian, Russian, Both };

/// Where a rule's pattern may match. `suffix`/`prefix` anchor on the whole
/// input; `word_final`/`word_initial` anchor on every space-separated word.
enum class PatternKind { Suffix, Prefix, Anywhere, WordFinal, WordInitial };

inline constexpr std::string_view to_string(SourceLanguage s) {
  switch (s) {
    case SourceLanguage::Norwegian: return "norwegian";
    case SourceLanguage::Russian: return "russian";
    case SourceLanguage::Both: return "both";
  }
  return "both";
}

inline constexpr std::string_view to_string(PatternKind k) {
  switch (k) {
    case PatternKind::Suffix: return "suffix";
    case PatternKind::Prefix: return "prefix";
    case PatternKind::Anywhere: return "anywhere";
    case PatternKind::WordFinal: return "word_final";
    case PatternKind::WordInitial: return "word_initial";
  }
  return "anywhere";
}

namespace detail {

inline std::wstring widen(std::string_view s) {
  const auto u = text::to_u32(s);
  return {u.begin(), u.end()};
}

inline std::string narrow(const std::wstring& w) {
  return text::from_u32(std::u32string(w.begin(), w.end()));
}

}  // namespace detail

/// One named adaptation rule. The pattern is an ECMAScript regular
/// expression; replacements may refer to its capture groups as $1, $2, ...
class RewriteRule {
 public:
  RewriteRule(std::string id, SourceLanguage source, PatternKind kind, std::string match,
              std::vector<std::string> replacements, int stage, bool optional,
              std::optional<PartOfSpeech> pos = std::nullopt, std::string description = {})
      : id_(std::move(id)),
        source_(source),
        kind_(kind),
        match_(std::move(match)),
        replacements_(std::move(replacements)),
        stage_(stage),
        optional_(optional),
        pos_(pos),
        description_(std::move(description)) {
    if (id_.empty()) throw InvalidArgument("rewrite rule without an id");
    if (replacements_.empty()) throw InvalidArgument("rule " + id_ + ": no replacements");
    if (stage_ < 0) throw InvalidArgument("rule " + id_ + ": negative stage");
    if (match_.empty()) throw InvalidArgument("rule " + id_ + ": empty pattern");
    const auto body = L"(?:" + detail::widen(match_) + L")";
    std::wstring anchored;
    switch (kind_) {
      case PatternKind::Suffix:
      case PatternKind::WordFinal: anchored = body + L"$"; break;
      case PatternKind::Prefix:
      case PatternKind::WordInitial: anchored = L"^" + body; break;
      case PatternKind::Anywhere: anchored = body; break;
    }
    try {
      regex_ = std::make_shared<const std::wregex>(anchored, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw InvalidArgument("rule " + id_ + ": bad pattern '" + match_ + "': " + e.what());
    }
  }

  const std::string& id() const noexcept { return id_; }
  SourceLanguage source_language() const noexcept { return source_; }
  PatternKind pattern_kind() const noexcept { return kind_; }
  const std::string& match() const noexcept { return match_; }
  const std::vector<std::string>& replacements() const noexcept { return replacements_; }
  int stage() const noexcept { return stage_; }
  bool optional() const noexcept { return optional_; }
  const std::optional<PartOfSpeech>& pos() const noexcept { return pos_; }
  const std::string& description() const noexcept { return description_; }

  bool applies_to(SourceLanguage source, std::optional<PartOfSpeech> pos_hint) const {
    if (source_ != SourceLanguage::Both && source_ != source) return false;
    return !pos_ || (pos_hint && *pos_hint == *pos_);
  }

  /// Rewrites `word` with one replacement. Returns nullopt when the pattern
  /// does not match anywhere it is allowed to.
  std::optional<std::string> rewrite(std::string_view word, std::string_view replacement) const {
    const auto fmt = detail::widen(replacement);
    const auto w = detail::widen(word);
    if (kind_ == PatternKind::WordFinal || kind_ == PatternKind::WordInitial) {
      bool any = false;
      std::wstring out;
      std::size_t start = 0;
      while (start <= w.size()) {
        const auto end = std::min(w.find(L' ', start), w.size());
        auto token = w.substr(start, end - start);
        if (auto r = rewrite_anchored(token, fmt)) {
          token = std::move(*r);
          any = true;
        }
        out += token;
        if (end == w.size()) break;
        out.push_back(L' ');
        start = end + 1;
      }
      if (!any) return std::nullopt;
      return detail::narrow(out);
    }
    if (kind_ == PatternKind::Anywhere) {
      if (!std::regex_search(w, *regex_)) return std::nullopt;
      return detail::narrow(std::regex_replace(w, *regex_, fmt));
    }
    auto r = rewrite_anchored(w, fmt);
    if (!r) return std::nullopt;
    return detail::narrow(*r);
  }

 private:
  std::optional<std::wstring> rewrite_anchored(const std::wstring& w, const std::wstring& fmt) const {
    std::wsmatch m;
    if (w.empty() || !std::regex_search(w, m, *regex_)) return std::nullopt;
    return m.prefix().str() + m.format(fmt) + m.suffix().str();
  }

  std::string id_;
  SourceLanguage source_;
  PatternKind kind_;
  std::string match_;
  std::vector<std::string> replacements_;
  int stage_;
  bool optional_;
  std::optional<PartOfSpeech> pos_;
  std::string description_;
  std::shared_ptr<const std::wregex> regex_;
};

struct TraceStep {
  std::string rule_id;
  std::string before;
  std::string after;
  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

struct RuleTrace {
  std::string input;
  std::vector<TraceStep> steps;
  std::string output;
  friend bool operator==(const RuleTrace&, const RuleTrace&) = default;
};

struct Candidate {
  std::string form;
  RuleTrace trace;
  int rank = 0;                 ///< 0 is best
  int optional_branches = 0;    ///< optional rules that fired on the derivation
};

/// One outcome of applying a rule; `step` is empty when the word is unchanged.
struct RuleOutcome {
  std::string form;
  std::optional<TraceStep> step;
};

/// Every branch of `rule` applied to `word`. An unmatched pattern yields the
/// word unchanged; an optional rule additionally keeps the unchanged word.
inline std::vector<RuleOutcome> apply_rule(std::string_view word, const RewriteRule& rule) {
  std::vector<RuleOutcome> out;
  auto push = [&out](std::string form, std::optional<TraceStep> step) {
    for (const auto& o : out) {
      if (o.form == form) return;
    }
    out.push_back({std::move(form), std::move(step)});
  };
  bool matched = false;
  for (const auto& replacement : rule.replacements()) {
    auto rewritten = rule.rewrite(word, replacement);
    if (!rewritten) break;
    matched = true;
    if (*rewritten == word) {
      push(std::string(word), std::nullopt);
    } else {
      push(*rewritten, TraceStep{rule.id(), std::string(word), *rewritten});
    }
  }
  if (!matched || rule.optional()) push(std::string(word), std::nullopt);
  return out;
}

// ---------------------------------------------------------------------------
// Rule sets

namespace detail {

inline SourceLanguage parse_source(const std::string& s, const std::string& id) {
  if (s == "norwegian") return SourceLanguage::Norwegian;
  if (s == "russian") return SourceLanguage::Russian;
  if (s == "both") return SourceLanguage::Both;
  throw InvalidArgument("rule " + id + ": unknown source_language '" + s + "'");
}

inline PatternKind parse_kind(const std::string& s, const std::string& id) {
  if (s == "suffix") return PatternKind::Suffix;
  if (s == "prefix") return PatternKind::Prefix;
  if (s == "anywhere") return PatternKind::Anywhere;
  if (s == "word_final") return PatternKind::WordFinal;
  if (s == "word_initial") return PatternKind::WordInitial;
  throw InvalidArgument("rule " + id + ": unknown pattern_kind '" + s + "'");
}

}  // namespace detail

/// Parses a rule-set document. Rule ids must be unique.
inline std::vector<RewriteRule> parse_rules(std::string_view document) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!root.is_array()) throw ValidationError(0, "<root>", "expected an array of rules");
  std::vector<RewriteRule> rules;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const auto& r = root[i];
    try {
      const auto id = r.at("id").get<std::string>();
      std::optional<PartOfSpeech> pos;
      if (r.contains("pos") && !r["pos"].is_null()) {
        pos = lexicon::parse_pos(r["pos"].get<std::string>());
        if (!pos) throw ValidationError(i, "pos", "unknown part of speech");
      }
      rules.emplace_back(id, detail::parse_source(r.at("source_language").get<std::string>(), id),
                         detail::parse_kind(r.at("pattern_kind").get<std::string>(), id),
                         r.at("match").get<std::string>(),
                         r.at("replacements").get<std::vector<std::string>>(),
                         r.at("stage").get<int>(), r.value("optional", false), pos,
                         r.value("description", std::string{}));
      if (!ids.insert(id).second) throw ValidationError(i, "id", "duplicate rule id '" + id + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(i, "<rule>", e.what());
    } catch (const InvalidArgument& e) {
      throw ValidationError(i, "<rule>", e.what());
    }
  }
  return rules;
}

inline nlohmann::ordered_json to_json(const RewriteRule& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id();
  if (!r.description().empty()) j["description"] = r.description();
  j["source_language"] = to_string(r.source_language());
  j["pattern_kind"] = to_string(r.pattern_kind());
  j["match"] = r.match();
  j["replacements"] = r.replacements();
  j["stage"] = r.stage();
  j["optional"] = r.optional();
  if (r.pos()) j["pos"] = lexicon::to_string(*r.pos());
  return j;
}

/// The built-in adaptation rule catalog (data/rules.json).
inline const std::vector<RewriteRule>& default_rules() {
  static const std::vector<RewriteRule> rules = parse_rules(bundled::rules);
  return rules;
}

inline constexpr std::string_view kClusterRuleId = "ru-initial-cluster-reduction";

/// Replaces the initial-cluster rule so it drops the first consonant of each
/// listed word-initial cluster.
inline std::vector<RewriteRule> with_cluster_set(std::vector<RewriteRule> rules,
                                                 const std::vector<std::string>& clusters) {
  std::string pattern;
  for (const auto& c : clusters) {
    const auto u = text::to_u32(c);
    if (u.size() < 2) throw InvalidArgument("cluster '" + c + "' needs at least two letters");
    if (!pattern.empty()) pattern += "|";
    pattern += text::from_u32(u.substr(0, 1)) + "(?=" + text::from_u32(u.substr(1)) + ")";
  }
  for (auto& r : rules) {
    if (r.id() != kClusterRuleId) continue;
    if (clusters.empty()) {
      pattern = "(?!)";
    }
    r = RewriteRule(r.id(), r.source_language(), r.pattern_kind(), pattern, r.replacements(),
                    r.stage(), r.optional(), r.pos(), r.description());
  }
  return rules;
}

// ---------------------------------------------------------------------------
// Transliteration

enum class Script { Cyrillic };

/// Letter-for-letter table from Cyrillic to Latin.
class TransliterationTable {
 public:
  explicit TransliterationTable(std::map<char32_t, std::string> table) : table_(std::move(table)) {}

  static TransliterationTable parse(std::string_view document) {
    nlohmann::json root;
    try {
      root = nlohmann::json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.what(), e.byte);
    }
    if (!root.is_object()) throw ValidationError(0, "<root>", "expected an object");
    std::map<char32_t, std::string> table;
    std::size_t i = 0;
    for (const auto& [key, value] : root.items()) {
      const auto k = text::to_u32(key);
      if (k.size() != 1 || !value.is_string()) {
        throw ValidationError(i, key, "expected a single letter mapped to a string");
      }
      table.emplace(k.front(), value.get<std::string>());
      ++i;
    }
    return TransliterationTable(std::move(table));
  }

  /// Lowercases `word` and maps it through the table.
  std::string apply(std::string_view word) const {
    std::string out;
    for (char32_t c : text::to_u32(text::fold_case(word))) {
      const auto it = table_.find(c);
      if (it == table_.end()) {
        throw InvalidArgument("no transliteration for character '" + text::from_u32({&c, 1}) + "'");
      }
      out += it->second;
    }
    return out;
  }

  const std::map<char32_t, std::string>& entries() const noexcept { return table_; }

 private:
  std::map<char32_t, std::string> table_;
};

inline const TransliterationTable& default_transliteration() {
  static const TransliterationTable table = TransliterationTable::parse(bundled::transliteration);
  return table;
}

inline std::string transliterate(std::string_view word, Script script = Script::Cyrillic,
                                 const TransliterationTable& table = default_transliteration()) {
  (void)script;
  return table.apply(word);
}

// ---------------------------------------------------------------------------
// Adaptation

struct AdaptOptions {
  std::size_t max_candidates = 64;
};

namespace detail {

struct Partial {
  std::string form;
  std::vector<TraceStep> steps;
  int optional_branches = 0;

  auto key() const {
    return std::tuple<int, std::size_t, const std::string&>(optional_branches, steps.size(), form);
  }
};

inline void check_adaptable(std::string_view word) {
  if (text::trim(word).empty()) throw InvalidArgument("cannot adapt an empty word");
  for (char32_t c : text::to_u32(word)) {
    if (c == U' ' || c == U'-' || c == U'\'' || text::is_latin_letter(c)) continue;
    throw InvalidArgument("'" + std::string(word) +
                          "' is not in Latin script; transliterate it first");
  }
}

inline void prune(std::vector<Partial>& frontier, std::size_t cap) {
  std::stable_sort(frontier.begin(), frontier.end(),
                   [](const Partial& a, const Partial& b) { return a.key() < b.key(); });
  std::set<std::string> seen;
  std::erase_if(frontier, [&seen](const Partial& p) { return !seen.insert(p.form).second; });
  if (frontier.size() > cap) frontier.resize(cap);
}

}  // namespace detail

/// Runs the staged rule set over `word` and returns ranked, de-duplicated
/// candidates. Rules are applied in (stage, declaration) order; each rule is
/// applied to every surviving candidate. Ranking is by fewest optional rules
/// fired, then fewest rules applied, then form.
inline std::vector<Candidate> adapt(std::string_view word, SourceLanguage source,
                                    std::optional<PartOfSpeech> pos_hint = std::nullopt,
                                    const std::vector<RewriteRule>& rules = default_rules(),
                                    const AdaptOptions& options = {}) {
  if (source == SourceLanguage::Both) throw InvalidArgument("adapt needs a single source language");
  detail::check_adaptable(word);
  const auto input = text::fold_case(text::trim(word));

  std::vector<const RewriteRule*> ordered;
  for (const auto& r : rules) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const RewriteRule* a, const RewriteRule* b) { return a->stage() < b->stage(); });

  std::vector<detail::Partial> frontier{{input, {}, 0}};
  for (const auto* rule : ordered) {
    if (!rule->applies_to(source, pos_hint)) continue;
    std::vector<detail::Partial> next;
    for (const auto& p : frontier) {
      for (auto& outcome : apply_rule(p.form, *rule)) {
        auto child = p;
        child.form = std::move(outcome.form);
        if (outcome.step) {
          child.steps.push_back(std::move(*outcome.step));
          if (rule->optional()) ++child.optional_branches;
        }
        next.push_back(std::move(child));
      }
    }
    detail::prune(next, std::max<std::size_t>(options.max_candidates, 1));
    frontier = std::move(next);
  }

  std::vector<Candidate> out;
  out.reserve(frontier.size());
  for (auto& p : frontier) {
    Candidate c;
    c.form = p.form;
    c.trace = RuleTrace{input, std::move(p.steps), p.form};
    c.rank = static_cast<int>(out.size());
    c.optional_branches = p.optional_branches;
    out.push_back(std::move(c));
  }
  return out;
}

/// Re-derives a trace: every step must be a branch of its named rule applied
/// to the previous form. Returns the final form, or nullopt if unsound.
inline std::optional<std::string> replay(const RuleTrace& trace,
                                         const std::vector<RewriteRule>& rules = default_rules()) {
  std::string form = trace.input;
  for (const auto& step : trace.steps) {
    if (step.before != form) return std::nullopt;
    const auto it = std::find_if(rules.begin(), rules.end(),
                                 [&](const RewriteRule& r) { return r.id() == step.rule_id; });
    if (it == rules.end()) return std::nullopt;
    const auto outcomes = apply_rule(form, *it);
    const bool derivable = std::any_of(outcomes.begin(), outcomes.end(), [&](const RuleOutcome& o) {
      return o.step && o.form == step.after;
    });
    if (!derivable) return std::nullopt;
    form = step.after;
  }
  if (form != trace.output) return std::nullopt;
  return form;
}

}  // namespace rusnor::transducer
