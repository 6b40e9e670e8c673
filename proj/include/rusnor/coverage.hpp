#pragma once

// Keyword scoring of model hypotheses against the 27-item property catalog,
// and the hypothesis-by-run coverage matrix built from it.

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rusnor/bundled_data.hpp"
#include "rusnor/error.hpp"
#include "rusnor/text.hpp"

namespace rusnor::coverage {

enum class Category { GrammarSyntax, PhoneticsMorphology, LexiconOrigin };

inline constexpr std::array kAllCategories = {Category::GrammarSyntax, Category::PhoneticsMorphology,
                                              Category::LexiconOrigin};

inline constexpr std::string_view to_string(Category c) {
  switch (c) {
    case Category::GrammarSyntax: return "GrammarSyntax";
    case Category::PhoneticsMorphology: return "PhoneticsMorphology";
    case Category::LexiconOrigin: return "LexiconOrigin";
  }
  return "GrammarSyntax";
}

inline constexpr std::string_view display_name(Category c) {
  switch (c) {
    case Category::GrammarSyntax: return "Grammar and Syntax";
    case Category::PhoneticsMorphology: return "Phonetics and Morphology";
    case Category::LexiconOrigin: return "Lexicon and Origin Hypotheses";
  }
  return "";
}

inline std::optional<Category> parse_category(std::string_view s) {
  for (auto c : kAllCategories) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

struct CatalogItem {
  std::string id;
  Category category = Category::GrammarSyntax;
  std::string title;
  /// Lowercase match terms. A trailing '*' matches any word continuation.
  std::vector<std::string> keywords;
  std::string paper_citation;
  std::optional<int> min_keywords;

  /// Keyword hits needed for a match: the explicit value, else 1 for a
  /// single keyword and 2 otherwise.
  int required_hits() const {
    if (min_keywords) return *min_keywords;
    return keywords.size() == 1 ? 1 : 2;
  }
  friend bool operator==(const CatalogItem&, const CatalogItem&) = default;
};

inline std::vector<CatalogItem> parse_catalog(std::string_view document) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!root.is_array()) throw ParseError("catalog must be a JSON array", 0);

  std::vector<CatalogItem> items;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const auto& r = root[i];
    auto str = [&](const char* field) {
      if (!r.is_object() || !r.contains(field) || !r[field].is_string()) {
        throw ValidationError(i, field, "missing or not a string");
      }
      return r[field].get<std::string>();
    };
    CatalogItem item;
    item.id = str("id");
    if (item.id.empty()) throw ValidationError(i, "id", "empty");
    const auto category = str("category");
    const auto parsed = parse_category(category);
    if (!parsed) throw ValidationError(i, "category", "unknown category '" + category + "'");
    item.category = *parsed;
    item.title = str("title");
    item.paper_citation = r.value("paper_citation", std::string());
    if (!r.contains("keywords") || !r["keywords"].is_array() || r["keywords"].empty()) {
      throw ValidationError(i, "keywords", "must be a non-empty array");
    }
    for (const auto& k : r["keywords"]) {
      if (!k.is_string()) throw ValidationError(i, "keywords", "must contain strings");
      auto kw = k.get<std::string>();
      if (text::trim(kw).empty() || kw == "*") throw ValidationError(i, "keywords", "empty keyword");
      if (text::fold_case(kw) != kw) throw ValidationError(i, "keywords", "keyword '" + kw + "' is not lowercase");
      item.keywords.push_back(std::move(kw));
    }
    if (r.contains("min_keywords")) {
      if (!r["min_keywords"].is_number_integer()) throw ValidationError(i, "min_keywords", "must be an integer");
      const int m = r["min_keywords"].get<int>();
      if (m < 1 || m > static_cast<int>(item.keywords.size())) {
        throw ValidationError(i, "min_keywords", "must be between 1 and the keyword count");
      }
      item.min_keywords = m;
    }
    if (!ids.insert(item.id).second) throw ValidationError(i, "id", "duplicate id '" + item.id + "'");
    items.push_back(std::move(item));
  }
  return items;
}

inline const std::vector<CatalogItem>& default_catalog() {
  static const auto catalog = parse_catalog(bundled::catalog);
  return catalog;
}

// ---------------------------------------------------------------------------
// Keyword matching

namespace detail {

/// Case-folded, diacritic-stripped code points with whitespace runs
/// collapsed to one space.
inline std::u32string match_form(std::string_view s) {
  std::u32string out;
  for (char32_t c : text::fold_for_comparison(s)) {
    if (text::is_space(c)) {
      if (!out.empty() && out.back() != U' ') out.push_back(U' ');
    } else {
      out.push_back(c);
    }
  }
  while (!out.empty() && out.back() == U' ') out.pop_back();
  return out;
}

struct Keyword {
  std::u32string body;
  bool prefix = false;
};

inline Keyword compile_keyword(std::string_view kw) {
  Keyword k;
  if (kw.ends_with('*')) {
    k.prefix = true;
    kw.remove_suffix(1);
  }
  k.body = match_form(kw);
  return k;
}

/// True when `k` occurs in `hay` on word boundaries.
inline bool contains_keyword(std::u32string_view hay, const Keyword& k) {
  if (k.body.empty()) return false;
  const bool open_start = text::is_alnum(k.body.front());
  const bool open_end = text::is_alnum(k.body.back()) && !k.prefix;
  for (auto pos = hay.find(k.body); pos != std::u32string_view::npos; pos = hay.find(k.body, pos + 1)) {
    const auto end = pos + k.body.size();
    if (open_start && pos > 0 && text::is_alnum(hay[pos - 1])) continue;
    if (open_end && end < hay.size() && text::is_alnum(hay[end])) continue;
    return true;
  }
  return false;
}

}  // namespace detail

/// Number of distinct keywords of `item` found in `hypothesis`.
inline int keyword_hits(std::string_view hypothesis, const CatalogItem& item) {
  const auto hay = detail::match_form(hypothesis);
  int hits = 0;
  for (const auto& kw : item.keywords) {
    if (detail::contains_keyword(hay, detail::compile_keyword(kw))) ++hits;
  }
  return hits;
}

enum class Verdict { Matched, NotMatched, ManualOverrideMatched, ManualOverrideNotMatched };

inline constexpr std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Matched: return "Matched";
    case Verdict::NotMatched: return "NotMatched";
    case Verdict::ManualOverrideMatched: return "ManualOverrideMatched";
    case Verdict::ManualOverrideNotMatched: return "ManualOverrideNotMatched";
  }
  return "NotMatched";
}

inline std::optional<Verdict> parse_verdict(std::string_view s) {
  for (auto v : {Verdict::Matched, Verdict::NotMatched, Verdict::ManualOverrideMatched,
                 Verdict::ManualOverrideNotMatched}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

inline constexpr bool is_positive(Verdict v) {
  return v == Verdict::Matched || v == Verdict::ManualOverrideMatched;
}

struct Cell {
  Verdict verdict = Verdict::NotMatched;
  std::optional<std::string> trigger;  ///< hypothesis that produced the match
  std::vector<std::string> notes;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// One verdict per catalog item, in catalog order.
using Column = std::vector<Cell>;

/// A catalog item is matched by the first hypothesis carrying enough of its
/// keywords.
inline Column match_hypotheses(const std::vector<std::string>& raw, const std::vector<CatalogItem>& catalog) {
  std::vector<std::u32string> hays;
  hays.reserve(raw.size());
  for (const auto& h : raw) hays.push_back(detail::match_form(h));

  Column column(catalog.size());
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const auto& item = catalog[i];
    std::vector<detail::Keyword> keywords;
    for (const auto& kw : item.keywords) keywords.push_back(detail::compile_keyword(kw));
    const int need = item.required_hits();
    for (std::size_t h = 0; h < hays.size(); ++h) {
      const auto hits = std::count_if(keywords.begin(), keywords.end(),
                                      [&](const auto& k) { return detail::contains_keyword(hays[h], k); });
      if (hits >= need) {
        column[i].verdict = Verdict::Matched;
        column[i].trigger = raw[h];
        break;
      }
    }
  }
  return column;
}

// ---------------------------------------------------------------------------
// Matrix

struct Recall {
  std::size_t matched = 0;
  std::size_t total = 0;
  double ratio() const { return total == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(total); }
  friend bool operator==(const Recall&, const Recall&) = default;
};

class CoverageMatrix {
 public:
  explicit CoverageMatrix(std::vector<CatalogItem> rows) : rows_(std::move(rows)) {}

  const std::vector<CatalogItem>& rows() const noexcept { return rows_; }
  const std::vector<std::string>& columns() const noexcept { return columns_; }

  void add_column(std::string label, Column column) {
    if (column.size() != rows_.size()) {
      throw InvalidArgument("column '" + label + "' has " + std::to_string(column.size()) + " cells for " +
                            std::to_string(rows_.size()) + " rows");
    }
    if (column_index(label)) throw InvalidArgument("duplicate column '" + label + "'");
    columns_.push_back(std::move(label));
    cells_.push_back(std::move(column));
  }

  std::optional<std::size_t> row_index(std::string_view id) const {
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (rows_[i].id == id) return i;
    }
    return std::nullopt;
  }

  std::optional<std::size_t> column_index(std::string_view label) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i] == label) return i;
    }
    return std::nullopt;
  }

  const Cell& cell(std::size_t row, std::size_t column) const { return cells_.at(column).at(row); }
  Cell& cell(std::size_t row, std::size_t column) { return cells_.at(column).at(row); }

  const Cell& cell(std::string_view row, std::string_view column) const {
    return cell(require_row(row), require_column(column));
  }

  std::size_t require_row(std::string_view id) const {
    if (auto r = row_index(id)) return *r;
    throw InvalidArgument("unknown row '" + std::string(id) + "'");
  }
  std::size_t require_column(std::string_view label) const {
    if (auto c = column_index(label)) return *c;
    throw InvalidArgument("unknown column '" + std::string(label) + "'");
  }

  Recall recall(std::size_t column, std::optional<Category> category = std::nullopt) const {
    Recall r;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (category && rows_[i].category != *category) continue;
      ++r.total;
      if (is_positive(cells_.at(column)[i].verdict)) ++r.matched;
    }
    return r;
  }
  Recall recall(std::string_view column) const { return recall(require_column(column)); }

  /// Rows positive in at least one of the given columns.
  Recall union_recall(const std::vector<std::string>& labels) const {
    std::vector<std::size_t> cols;
    for (const auto& l : labels) cols.push_back(require_column(l));
    Recall r{0, rows_.size()};
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (std::any_of(cols.begin(), cols.end(), [&](auto c) { return is_positive(cells_[c][i].verdict); })) {
        ++r.matched;
      }
    }
    return r;
  }

  friend bool operator==(const CoverageMatrix&, const CoverageMatrix&) = default;

 private:
  std::vector<CatalogItem> rows_;
  std::vector<std::string> columns_;
  std::vector<Column> cells_;  // [column][row]
};

struct Override {
  std::string row;
  std::string column;
  bool matched = false;
  std::string note;
};

inline std::vector<Override> parse_overrides(std::string_view document) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!root.is_array()) throw ParseError("overrides must be a JSON array", 0);
  std::vector<Override> out;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const auto& r = root[i];
    Override o;
    try {
      o.row = r.at("row").get<std::string>();
      o.column = r.at("column").get<std::string>();
      o.note = r.value("note", std::string());
      const auto& v = r.at("verdict");
      if (v.is_boolean()) {
        o.matched = v.get<bool>();
      } else {
        const auto parsed = parse_verdict(v.get<std::string>());
        if (!parsed) throw ValidationError(i, "verdict", "unknown verdict '" + v.get<std::string>() + "'");
        o.matched = is_positive(*parsed);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(i, "override", e.what());
    }
    out.push_back(std::move(o));
  }
  return out;
}

/// Replaces cells with manual verdicts. The automatic verdict is kept in the
/// cell's note trail. All targets are checked before anything changes.
inline CoverageMatrix apply_overrides(CoverageMatrix matrix, const std::vector<Override>& overrides) {
  std::vector<std::pair<std::size_t, std::size_t>> targets;
  for (const auto& o : overrides) targets.emplace_back(matrix.require_row(o.row), matrix.require_column(o.column));
  for (std::size_t i = 0; i < overrides.size(); ++i) {
    auto& cell = matrix.cell(targets[i].first, targets[i].second);
    std::string note = "was " + std::string(to_string(cell.verdict));
    if (!overrides[i].note.empty()) note += ": " + overrides[i].note;
    cell.notes.push_back(std::move(note));
    cell.verdict = overrides[i].matched ? Verdict::ManualOverrideMatched : Verdict::ManualOverrideNotMatched;
  }
  return matrix;
}

/// Matrix read from {columns, cells: {row id: [bool per column]}}; rows
/// follow the catalog order and every catalog row must be present.
inline CoverageMatrix load_matrix(std::string_view document,
                                  const std::vector<CatalogItem>& catalog = default_catalog()) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  CoverageMatrix m(catalog);
  try {
    const auto labels = root.at("columns").get<std::vector<std::string>>();
    const auto& cells = root.at("cells");
    for (const auto& [id, _] : cells.items()) {
      if (!m.row_index(id)) throw InvalidArgument("matrix row '" + id + "' is not in the catalog");
    }
    for (std::size_t c = 0; c < labels.size(); ++c) {
      Column col(catalog.size());
      for (std::size_t r = 0; r < catalog.size(); ++r) {
        const auto& row = cells.at(catalog[r].id);
        if (row.size() != labels.size()) throw InvalidArgument("row '" + catalog[r].id + "' has the wrong width");
        col[r].verdict = row.at(c).get<bool>() ? Verdict::Matched : Verdict::NotMatched;
      }
      m.add_column(labels[c], std::move(col));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad matrix document: ") + e.what(), 0);
  }
  return m;
}

inline CoverageMatrix table1_matrix() { return load_matrix(bundled::table1_matrix); }

// ---------------------------------------------------------------------------
// Rendering

namespace detail {

inline std::size_t display_width(std::string_view s) { return text::to_u32(s).size(); }

inline std::string pad(std::string_view s, std::size_t width) {
  std::string out(s);
  const auto w = display_width(s);
  if (w < width) out.append(width - w, ' ');
  return out;
}

inline std::string recall_text(const Recall& r) {
  return std::to_string(r.matched) + "/" + std::to_string(r.total);
}

inline std::string_view mark(Verdict v) {
  switch (v) {
    case Verdict::Matched: return "yes";
    case Verdict::NotMatched: return "no";
    case Verdict::ManualOverrideMatched: return "yes*";
    case Verdict::ManualOverrideNotMatched: return "no*";
  }
  return "no";
}

}  // namespace detail

/// Plain-text table grouped by category; '*' marks manual overrides.
inline std::string render_text(const CoverageMatrix& m) {
  std::size_t first = std::string_view("Hypothesis").size();
  for (const auto& r : m.rows()) first = std::max(first, detail::display_width(r.title));
  first = std::max(first, std::string_view("Total recall").size());
  std::vector<std::size_t> widths;
  for (const auto& c : m.columns()) widths.push_back(std::max<std::size_t>(detail::display_width(c), 5));

  std::ostringstream os;
  auto line = [&](std::string_view head, const std::vector<std::string>& values) {
    auto l = detail::pad(head, first);
    for (std::size_t c = 0; c < values.size(); ++c) l += "  " + detail::pad(values[c], widths[c]);
    while (l.ends_with(' ')) l.pop_back();
    os << l << '\n';
  };
  line("Hypothesis", m.columns());
  for (auto category : kAllCategories) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < m.rows().size(); ++i) {
      if (m.rows()[i].category == category) rows.push_back(i);
    }
    if (rows.empty()) continue;
    os << '[' << display_name(category) << "]\n";
    for (auto i : rows) {
      std::vector<std::string> values;
      for (std::size_t c = 0; c < m.columns().size(); ++c) values.emplace_back(detail::mark(m.cell(i, c).verdict));
      line(m.rows()[i].title, values);
    }
    std::vector<std::string> recalls;
    for (std::size_t c = 0; c < m.columns().size(); ++c) recalls.push_back(detail::recall_text(m.recall(c, category)));
    line("  recall", recalls);
  }
  if (!m.rows().empty()) {
    std::vector<std::string> totals;
    for (std::size_t c = 0; c < m.columns().size(); ++c) totals.push_back(detail::recall_text(m.recall(c)));
    line("Total recall", totals);
  }
  return os.str();
}

inline nlohmann::ordered_json render_json(const CoverageMatrix& m) {
  nlohmann::ordered_json j;
  j["columns"] = m.columns();
  j["rows"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < m.rows().size(); ++i) {
    const auto& item = m.rows()[i];
    nlohmann::ordered_json row;
    row["id"] = item.id;
    row["category"] = to_string(item.category);
    row["title"] = item.title;
    row["cells"] = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < m.columns().size(); ++c) {
      const auto& cell = m.cell(i, c);
      nlohmann::ordered_json cj;
      cj["verdict"] = to_string(cell.verdict);
      if (cell.trigger) cj["trigger"] = *cell.trigger;
      if (!cell.notes.empty()) cj["notes"] = cell.notes;
      row["cells"].push_back(std::move(cj));
    }
    j["rows"].push_back(std::move(row));
  }
  j["recall"] = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < m.columns().size(); ++c) {
    nlohmann::ordered_json r;
    for (auto category : kAllCategories) {
      const auto rc = m.recall(c, category);
      r[std::string(to_string(category))] = {{"matched", rc.matched}, {"total", rc.total}};
    }
    const auto total = m.recall(c);
    r["total"] = {{"matched", total.matched}, {"total", total.total}};
    j["recall"][m.columns()[c]] = std::move(r);
  }
  return j;
}

}  // namespace rusnor::coverage
