#pragma once

// Mock translation backends for the bench tests. They recover the direction,
// ablation and source sentence from the assembled prompt.

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rusnor/bench.hpp"

namespace mocks {

using rusnor::agent::Direction;
using rusnor::bench::Ablation;
using rusnor::bench::TranslationTriplet;

struct ParsedPrompt {
  Direction direction;
  Ablation ablation;
  std::string source;
};

inline ParsedPrompt parse_prompt(const std::string& user) {
  static const std::regex source_re(R"(### Source \(([A-Za-z]+)\)\n([^\n]*))");
  static const std::regex target_re(R"(into ([A-Za-z]+)\.)");
  std::smatch s, t;
  if (!std::regex_search(user, s, source_re) || !std::regex_search(user, t, target_re)) {
    throw std::runtime_error("not a translation prompt");
  }
  const std::string from = s[1], to = t[1];
  Direction d;
  if (from == "Russian") {
    d = Direction::RuToRn;
  } else if (from == "Norwegian") {
    d = Direction::NoToRn;
  } else if (to == "Russian") {
    d = Direction::RnToRu;
  } else {
    d = Direction::RnToNo;
  }
  const bool lex = user.find("### Dictionary") != std::string::npos;
  const bool ex = user.find("### Example sentences") != std::string::npos;
  const bool rules = user.find("### Rules and hypotheses") != std::string::npos;
  Ablation a = Ablation::None;
  if (lex && ex && rules) {
    a = Ablation::Full;
  } else if (lex && rules) {
    a = Ablation::NoExamples;
  } else if (rules) {
    a = Ablation::RulesOnly;
  }
  return {d, a, s[2]};
}

inline const TranslationTriplet& find_triplet(const std::vector<TranslationTriplet>& triplets, Direction d,
                                              const std::string& source) {
  for (const auto& t : triplets) {
    if (rusnor::bench::source_of(t, d) == source) return t;
  }
  throw std::runtime_error("unknown source sentence: " + source);
}

/// Answers every prompt with the gold reference.
inline std::shared_ptr<rusnor::agent::MockBackend> echo_gold(std::vector<TranslationTriplet> triplets) {
  return std::make_shared<rusnor::agent::MockBackend>([triplets](const rusnor::agent::ChatRequest& r) {
    const auto p = parse_prompt(r.user);
    return rusnor::bench::reference_of(find_triplet(triplets, p.direction, p.source), p.direction);
  });
}

inline std::shared_ptr<rusnor::agent::MockBackend> empty_answers() {
  return std::make_shared<rusnor::agent::MockBackend>([](const rusnor::agent::ChatRequest&) { return std::string(); });
}

inline std::string truncate(const std::string& s, double fraction) {
  const auto u = rusnor::text::to_u32(s);
  return rusnor::text::from_u32(u.substr(0, static_cast<std::size_t>(std::lround(fraction * double(u.size())))));
}

/// Answers with a prefix of the gold sentence, the prefix length chosen per
/// cell so that the cell's corpus chrF lands near a target score.
inline std::shared_ptr<rusnor::agent::MockBackend> replay_scores(std::vector<TranslationTriplet> triplets,
                                                                 const rusnor::bench::BenchReport& targets) {
  std::map<std::pair<Direction, Ablation>, double> fraction;
  for (const auto& cell : targets.cells) {
    if (!cell.score) continue;
    double best = 1.0, best_err = 1e9;
    for (int k = 0; k <= 400; ++k) {
      const double f = k / 400.0;
      std::vector<std::pair<std::string, std::string>> pairs;
      for (const auto& t : triplets) {
        const auto& ref = rusnor::bench::reference_of(t, cell.direction);
        pairs.emplace_back(truncate(ref, f), ref);
      }
      const double err = std::abs(rusnor::metric::corpus_chrf(pairs).value - cell.score->value);
      if (err < best_err) {
        best_err = err;
        best = f;
      }
    }
    fraction[{cell.direction, cell.ablation}] = best;
  }
  return std::make_shared<rusnor::agent::MockBackend>(
      [triplets, fraction](const rusnor::agent::ChatRequest& r) {
        const auto p = parse_prompt(r.user);
        const auto& ref = rusnor::bench::reference_of(find_triplet(triplets, p.direction, p.source), p.direction);
        return truncate(ref, fraction.at({p.direction, p.ablation}));
      });
}

}  // namespace mocks
