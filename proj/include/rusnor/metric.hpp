#pragma once

// chrF: character n-gram F-score, sentence and corpus level.
//
// Corpus scores sum the per-order n-gram statistics over all sentences and
// combine them once. Precision and recall are averaged over the "effective"
// orders, i.e. those where both hypothesis and reference have n-grams.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rusnor/error.hpp"
#include "rusnor/text.hpp"

namespace rusnor::metric {

struct ChrfParams {
  int max_ngram_order = 6;
  double beta = 2.0;
  bool remove_whitespace = true;
  bool lowercase = true;
  bool strip_diacritics = true;

  void validate() const {
    if (max_ngram_order < 1) throw InvalidArgument("chrF order must be at least 1");
    if (!(beta > 0.0)) throw InvalidArgument("chrF beta must be positive");
  }
  friend bool operator==(const ChrfParams&, const ChrfParams&) = default;
};

struct OrderStats {
  std::uint64_t matched = 0;
  std::uint64_t hypothesis = 0;
  std::uint64_t reference = 0;
  friend bool operator==(const OrderStats&, const OrderStats&) = default;
};

/// Per-order counts; element i holds order i + 1.
struct NgramStats {
  std::vector<OrderStats> orders;

  NgramStats() = default;
  explicit NgramStats(int max_order) : orders(static_cast<std::size_t>(max_order)) {}

  NgramStats& operator+=(const NgramStats& other) {
    if (orders.size() < other.orders.size()) orders.resize(other.orders.size());
    for (std::size_t i = 0; i < other.orders.size(); ++i) {
      orders[i].matched += other.orders[i].matched;
      orders[i].hypothesis += other.orders[i].hypothesis;
      orders[i].reference += other.orders[i].reference;
    }
    return *this;
  }
  friend bool operator==(const NgramStats&, const NgramStats&) = default;
};

struct ChrfScore {
  double value = 0.0;  ///< 0..100
  ChrfParams params;
  NgramStats stats;
};

/// Text as the metric sees it, as code points.
inline std::u32string preprocess_u32(std::string_view text, const ChrfParams& params) {
  std::u32string s;
  if (params.lowercase && params.strip_diacritics) {
    s = text::fold_for_comparison(text);
  } else if (params.strip_diacritics) {
    // Fold the Nordic letters without touching case.
    for (char32_t c : text::to_u32(text::strip_diacritics(text))) {
      switch (c) {
        case U'ø': s.push_back(U'o'); break;
        case U'Ø': s.push_back(U'O'); break;
        case U'æ': s.append(U"ae"); break;
        case U'Æ': s.append(U"AE"); break;
        default: s.push_back(c);
      }
    }
  } else if (params.lowercase) {
    s = text::to_u32(text::fold_case(text));
  } else {
    s = text::to_u32(text);
  }
  if (params.remove_whitespace) std::erase_if(s, text::is_space);
  return s;
}

inline std::string preprocess(std::string_view text, const ChrfParams& params = {}) {
  return text::from_u32(preprocess_u32(text, params));
}

namespace detail {

using NgramCounts = std::unordered_map<std::u32string_view, std::uint64_t>;

inline NgramCounts count_ngrams(std::u32string_view s, std::size_t n) {
  NgramCounts counts;
  if (s.size() < n) return counts;
  counts.reserve(s.size() - n + 1);
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++counts[s.substr(i, n)];
  return counts;
}

}  // namespace detail

/// N-gram statistics of already preprocessed code-point strings.
inline NgramStats ngram_stats(std::u32string_view hypothesis, std::u32string_view reference,
                              int max_order) {
  NgramStats stats(max_order);
  for (int order = 1; order <= max_order; ++order) {
    const auto n = static_cast<std::size_t>(order);
    auto& o = stats.orders[n - 1];
    o.hypothesis = hypothesis.size() >= n ? hypothesis.size() - n + 1 : 0;
    o.reference = reference.size() >= n ? reference.size() - n + 1 : 0;
    if (o.hypothesis == 0 || o.reference == 0) continue;
    const auto hyp = detail::count_ngrams(hypothesis, n);
    const auto ref = detail::count_ngrams(reference, n);
    const auto& small = hyp.size() <= ref.size() ? hyp : ref;
    const auto& large = hyp.size() <= ref.size() ? ref : hyp;
    for (const auto& [gram, count] : small) {
      if (const auto it = large.find(gram); it != large.end()) {
        o.matched += std::min(count, it->second);
      }
    }
  }
  return stats;
}

inline NgramStats sentence_stats(std::string_view hypothesis, std::string_view reference,
                                 const ChrfParams& params = {}) {
  params.validate();
  return ngram_stats(preprocess_u32(hypothesis, params), preprocess_u32(reference, params),
                     params.max_ngram_order);
}

/// Combines statistics into a score. When no order has n-grams on both
/// sides the score is 100 if both sides are empty and 0 otherwise.
inline ChrfScore chrf(const NgramStats& stats, const ChrfParams& params = {}) {
  params.validate();
  double precision = 0.0, recall = 0.0;
  int effective = 0;
  bool both_empty = true;
  for (const auto& o : stats.orders) {
    both_empty = both_empty && o.hypothesis == 0 && o.reference == 0;
    if (o.hypothesis == 0 || o.reference == 0) continue;
    precision += static_cast<double>(o.matched) / static_cast<double>(o.hypothesis);
    recall += static_cast<double>(o.matched) / static_cast<double>(o.reference);
    ++effective;
  }

  ChrfScore score{0.0, params, stats};
  if (effective == 0) {
    score.value = both_empty ? 100.0 : 0.0;
    return score;
  }
  precision /= effective;
  recall /= effective;
  if (precision + recall > 0.0) {
    const double b2 = params.beta * params.beta;
    score.value = 100.0 * (1.0 + b2) * precision * recall / (b2 * precision + recall);
  }
  return score;
}

inline ChrfScore sentence_chrf(std::string_view hypothesis, std::string_view reference,
                               const ChrfParams& params = {}) {
  return chrf(sentence_stats(hypothesis, reference, params), params);
}

/// Micro-averaged corpus score over (hypothesis, reference) pairs.
inline ChrfScore corpus_chrf(const std::vector<std::pair<std::string, std::string>>& pairs,
                             const ChrfParams& params = {}) {
  if (pairs.empty()) throw InvalidArgument("corpus chrF needs at least one sentence pair");
  NgramStats total(params.max_ngram_order);
  for (const auto& [hyp, ref] : pairs) total += sentence_stats(hyp, ref, params);
  return chrf(total, params);
}

}  // namespace rusnor::metric
