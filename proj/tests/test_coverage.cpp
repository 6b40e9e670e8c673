#include <gtest/gtest.h>

#include <random>

#include "rusnor/coverage.hpp"

using namespace rusnor::coverage;

namespace {

CatalogItem item(std::string id, std::vector<std::string> keywords, std::optional<int> min = std::nullopt) {
  CatalogItem c;
  c.id = std::move(id);
  c.title = c.id;
  c.keywords = std::move(keywords);
  c.min_keywords = min;
  return c;
}

const CatalogItem& catalog_item(std::string_view id) {
  for (const auto& c : default_catalog()) {
    if (c.id == id) return c;
  }
  throw std::runtime_error("missing catalog item");
}

}  // namespace

TEST(Catalog, BundledShape) {
  const auto& cat = default_catalog();
  ASSERT_EQ(cat.size(), 27u);
  int counts[3] = {0, 0, 0};
  for (const auto& c : cat) {
    ++counts[static_cast<int>(c.category)];
    EXPECT_FALSE(c.keywords.empty());
    for (const auto& k : c.keywords) EXPECT_EQ(rusnor::text::fold_case(k), k);
  }
  EXPECT_EQ(counts[0], 9);
  EXPECT_EQ(counts[1], 8);
  EXPECT_EQ(counts[2], 10);
}

TEST(Catalog, Errors) {
  EXPECT_THROW(parse_catalog(R"([{"id": "a", "category": "Nope", "title": "t", "keywords": ["x"]}])"),
               rusnor::ValidationError);
  EXPECT_THROW(parse_catalog(R"([{"id": "a", "category": "LexiconOrigin", "title": "t", "keywords": []}])"),
               rusnor::ValidationError);
  EXPECT_THROW(parse_catalog(R"([{"id": "a", "category": "LexiconOrigin", "title": "t", "keywords": ["X"]}])"),
               rusnor::ValidationError);
  EXPECT_THROW(parse_catalog(R"([{"id": "a", "category": "LexiconOrigin", "title": "t", "keywords": ["x"]},
                                 {"id": "a", "category": "LexiconOrigin", "title": "t", "keywords": ["x"]}])"),
               rusnor::ValidationError);
  EXPECT_THROW(parse_catalog(R"([{"id": "a", "category": "LexiconOrigin", "title": "t", "keywords": ["x"],
                                  "min_keywords": 2}])"),
               rusnor::ValidationError);
  EXPECT_THROW(parse_catalog("[1"), rusnor::ParseError);
}

TEST(Matching, VerbSuffixOm) {
  const auto col = match_hypotheses({"Verbs uniformly take an -om ending"}, {catalog_item("VerbSuffixOm")});
  EXPECT_EQ(col[0].verdict, Verdict::Matched);
  EXPECT_EQ(col[0].trigger, "Verbs uniformly take an -om ending");
}

TEST(Matching, SvoIsNotSov) {
  const auto& wo = catalog_item("WordOrder");
  EXPECT_EQ(match_hypotheses({"The language prefers SVO order"}, {wo})[0].verdict, Verdict::NotMatched);
  EXPECT_EQ(match_hypotheses({"Word order tends to be SOV"}, {wo})[0].verdict, Verdict::Matched);
  EXPECT_EQ(match_hypotheses({"Sentences are verb-final."}, {wo})[0].verdict, Verdict::Matched);
}

TEST(Matching, EmptyInputMatchesNothing) {
  for (const auto& c : match_hypotheses({}, default_catalog())) EXPECT_EQ(c.verdict, Verdict::NotMatched);
}

TEST(Matching, DefaultThresholds) {
  // Two keywords needed when there are several; one when there is one.
  const auto two = item("two", {"alpha", "beta", "gamma"});
  EXPECT_EQ(two.required_hits(), 2);
  EXPECT_EQ(match_hypotheses({"alpha only"}, {two})[0].verdict, Verdict::NotMatched);
  EXPECT_EQ(match_hypotheses({"alpha and gamma"}, {two})[0].verdict, Verdict::Matched);
  const auto one = item("one", {"dual etymology"});
  EXPECT_EQ(one.required_hits(), 1);
  EXPECT_EQ(match_hypotheses({"a case of dual etymology"}, {one})[0].verdict, Verdict::Matched);
}

TEST(Matching, KeywordsStopAtWordBoundaries) {
  const auto c = item("x", {"sov"});
  EXPECT_EQ(match_hypotheses({"Sovereign states"}, {c})[0].verdict, Verdict::NotMatched);
  EXPECT_EQ(match_hypotheses({"(SOV)"}, {c})[0].verdict, Verdict::Matched);
  const auto p = item("p", {"palatal*"});
  EXPECT_EQ(match_hypotheses({"depalatalization"}, {p})[0].verdict, Verdict::NotMatched);
  EXPECT_EQ(match_hypotheses({"palatalized consonants"}, {p})[0].verdict, Verdict::Matched);
}

TEST(Matching, CaseAndDiacriticInsensitive) {
  const auto c = item("pa", {"på", "universal"});
  EXPECT_EQ(match_hypotheses({"A UNIVERSAL preposition PA"}, {c})[0].verdict, Verdict::Matched);
  EXPECT_EQ(match_hypotheses({"a universal preposition på"}, {c})[0].verdict, Verdict::Matched);
}

TEST(Matching, WhitespaceRunsCollapse) {
  const auto c = item("c", {"front rounded"});
  EXPECT_EQ(match_hypotheses({"front\n   rounded vowels"}, {c})[0].verdict, Verdict::Matched);
}

TEST(Matching, FirstTriggeringHypothesisRecorded) {
  const auto c = item("n", {"negation", "njet"});
  const auto col = match_hypotheses({"nothing here", "Negation uses njet", "njet marks negation"}, {c});
  EXPECT_EQ(col[0].trigger, "Negation uses njet");
}

TEST(Matching, RandomCasingDoesNotChangeVerdicts) {
  const std::vector<std::string> hyps = {
      "Verbs take the -om suffix; this verb suffix is productive.", "There are no articles at all.",
      "Word order is SOV.", "Norwegian supplies fish and maritime vocabulary.",
      "Glottal h becomes g, as in gav.", "Russian consonant clusters are simplified, e.g. mnogo > nogoli."};
  const auto base = match_hypotheses(hyps, default_catalog());
  std::mt19937 rng(1);
  for (int round = 0; round < 20; ++round) {
    auto shuffled = hyps;
    for (auto& h : shuffled) {
      for (auto& ch : h) {
        if (rng() % 2) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      }
    }
    const auto col = match_hypotheses(shuffled, default_catalog());
    for (std::size_t i = 0; i < col.size(); ++i) EXPECT_EQ(col[i].verdict, base[i].verdict);
  }
}

TEST(Matching, Monotone) {
  const std::vector<std::string> pool = {
      "Verbs end in -om.", "No articles.", "SOV word order.", "Negation with njet and ikke.",
      "Final voiced consonants are devoiced.", "Many synonyms come in pairs: one Russian, one Norwegian.",
      "Fish names are Norwegian.", "Greetings are Russian, e.g. prosjai.", "Front rounded vowels are removed."};
  std::mt19937 rng(2);
  for (int round = 0; round < 30; ++round) {
    std::vector<std::string> some;
    for (const auto& h : pool) {
      if (rng() % 2) some.push_back(h);
    }
    auto more = some;
    more.push_back(pool[rng() % pool.size()]);
    const auto a = match_hypotheses(some, default_catalog());
    const auto b = match_hypotheses(more, default_catalog());
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (is_positive(a[i].verdict)) EXPECT_TRUE(is_positive(b[i].verdict));
    }
  }
}

TEST(Table1, Recalls) {
  const auto m = table1_matrix();
  EXPECT_EQ(m.recall("Sonnet"), (Recall{21, 27}));
  EXPECT_EQ(m.recall("o1"), (Recall{17, 27}));
  EXPECT_EQ(m.recall("Empty Dictionary"), (Recall{2, 27}));
  EXPECT_EQ(m.recall("Fictitious Pidgin"), (Recall{5, 27}));
}

TEST(Table1, EmptyDictionaryRows) {
  const auto m = table1_matrix();
  const auto c = m.require_column("Empty Dictionary");
  std::vector<std::string> hits;
  for (std::size_t r = 0; r < m.rows().size(); ++r) {
    if (is_positive(m.cell(r, c).verdict)) hits.push_back(m.rows()[r].id);
  }
  EXPECT_EQ(hits, (std::vector<std::string>{"MinimalInflection", "ClusterSplitting"}));
}

TEST(Table1, UnionRecall) {
  const auto m = table1_matrix();
  const auto u = m.union_recall({"Sonnet", "o1"});
  EXPECT_EQ(u, (Recall{22, 27}));
  for (const auto& a : m.columns()) {
    for (const auto& b : m.columns()) {
      const auto ab = m.union_recall({a, b}).matched;
      EXPECT_GE(ab, m.recall(a).matched);
      EXPECT_GE(ab, m.recall(b).matched);
    }
  }
}

TEST(Table1, CategoryRecall) {
  const auto m = table1_matrix();
  const auto s = m.require_column("Sonnet");
  EXPECT_EQ(m.recall(s, Category::GrammarSyntax), (Recall{8, 9}));
  EXPECT_EQ(m.recall(s, Category::PhoneticsMorphology), (Recall{7, 8}));
  EXPECT_EQ(m.recall(s, Category::LexiconOrigin), (Recall{6, 10}));
}

TEST(Overrides, ReplaceCellAndKeepTrail) {
  auto m = table1_matrix();
  const auto before = m.cell("WordOrder", "Fictitious Pidgin").verdict;
  m = apply_overrides(m, {{"WordOrder", "Fictitious Pidgin", false, "SVO, not SOV"}});
  const auto& c = m.cell("WordOrder", "Fictitious Pidgin");
  EXPECT_EQ(before, Verdict::Matched);
  EXPECT_EQ(c.verdict, Verdict::ManualOverrideNotMatched);
  ASSERT_EQ(c.notes.size(), 1u);
  EXPECT_EQ(c.notes[0], "was Matched: SVO, not SOV");
  EXPECT_EQ(m.recall("Fictitious Pidgin").matched, 4u);
}

TEST(Overrides, EmptyListIsIdentity) {
  const auto m = table1_matrix();
  EXPECT_EQ(apply_overrides(m, {}), m);
}

TEST(Overrides, UnknownTargets) {
  const auto m = table1_matrix();
  EXPECT_THROW(apply_overrides(m, {{"Nope", "Sonnet", true, ""}}), rusnor::InvalidArgument);
  EXPECT_THROW(apply_overrides(m, {{"WordOrder", "GPT", true, ""}}), rusnor::InvalidArgument);
  // Nothing is applied when any target is unknown.
  try {
    apply_overrides(m, {{"WordOrder", "Sonnet", true, ""}, {"Nope", "Sonnet", true, ""}});
  } catch (const rusnor::InvalidArgument&) {
  }
  EXPECT_EQ(m.cell("WordOrder", "Sonnet").verdict, Verdict::NotMatched);
}

TEST(Overrides, ParseJson) {
  const auto o = parse_overrides(
      R"([{"row": "WordOrder", "column": "Sonnet", "verdict": "NotMatched", "note": "SVO"},
          {"row": "Negation", "column": "o1", "verdict": true}])");
  ASSERT_EQ(o.size(), 2u);
  EXPECT_FALSE(o[0].matched);
  EXPECT_TRUE(o[1].matched);
  EXPECT_THROW(parse_overrides(R"([{"row": "a", "column": "b", "verdict": "Maybe"}])"), rusnor::ValidationError);
}

TEST(Render, TextHasRecallsAndCategories) {
  const auto text = render_text(table1_matrix());
  EXPECT_NE(text.find("[Grammar and Syntax]"), std::string::npos);
  EXPECT_NE(text.find("Total recall"), std::string::npos);
  EXPECT_NE(text.find("21/27"), std::string::npos);
  EXPECT_NE(text.find("17/27"), std::string::npos);
  EXPECT_EQ(render_text(table1_matrix()), text);
  for (std::size_t p = text.find('\n'); p != std::string::npos; p = text.find('\n', p + 1)) {
    if (p > 0) EXPECT_NE(text[p - 1], ' ');
  }
}

TEST(Render, SingleRow) {
  CoverageMatrix m({item("only", {"x"})});
  m.add_column("run", match_hypotheses({"x"}, m.rows()));
  const auto text = render_text(m);
  EXPECT_NE(text.find("Hypothesis"), std::string::npos);
  EXPECT_NE(text.find("only"), std::string::npos);
  EXPECT_NE(text.find("1/1"), std::string::npos);
}

TEST(Render, Json) {
  auto m = apply_overrides(table1_matrix(), {{"Negation", "o1", false, "checked"}});
  const auto j = render_json(m);
  EXPECT_EQ(j["columns"].size(), 4u);
  EXPECT_EQ(j["rows"].size(), 27u);
  EXPECT_EQ(j["recall"]["Sonnet"]["total"]["matched"], 21);
  EXPECT_EQ(j["recall"]["o1"]["total"]["matched"], 16);
  EXPECT_EQ(j["recall"]["Sonnet"]["GrammarSyntax"]["total"], 9);
}

TEST(MatrixShape, ColumnValidation) {
  CoverageMatrix m({item("a", {"x"}), item("b", {"y"})});
  EXPECT_THROW(m.add_column("bad", Column(1)), rusnor::InvalidArgument);
  m.add_column("ok", Column(2));
  EXPECT_THROW(m.add_column("ok", Column(2)), rusnor::InvalidArgument);
}

TEST(MatrixLoad, Errors) {
  EXPECT_THROW(load_matrix(R"({"columns": ["a"], "cells": {"Unknown": [true]}})"), rusnor::InvalidArgument);
  EXPECT_THROW(load_matrix(R"({"columns": ["a"], "cells": {}})"), rusnor::ParseError);
}
