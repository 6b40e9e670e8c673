#pragma once

// Translation benchmark: triplet loading, the model-free rn-vs-no baseline,
// the direction x ablation run matrix and its reports.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rusnor/bundled_data.hpp"
#include "rusnor/chat.hpp"
#include "rusnor/error.hpp"
#include "rusnor/lexicon.hpp"
#include "rusnor/metric.hpp"
#include "rusnor/prompt.hpp"
#include "rusnor/text.hpp"
#include "rusnor/transducer.hpp"

namespace rusnor::bench {

using agent::Direction;

class BenchError : public Error {
 public:
  using Error::Error;
};

struct TranslationTriplet {
  std::string id;
  std::string ru;
  std::string no;
  std::string rn;
  friend bool operator==(const TranslationTriplet&, const TranslationTriplet&) = default;
};

/// Reads a JSON array of {id, ru, no, rn}. Integer ids are accepted and
/// stored as their decimal text.
inline std::vector<TranslationTriplet> load_benchmark(std::string_view document) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!root.is_array()) throw ParseError("benchmark must be a JSON array", 0);
  if (root.empty()) throw ValidationError(0, "benchmark", "benchmark must be non-empty");

  std::vector<TranslationTriplet> out;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const auto& r = root[i];
    if (!r.is_object()) throw ValidationError(i, "record", "not an object");
    TranslationTriplet t;
    if (!r.contains("id")) throw ValidationError(i, "id", "missing");
    if (r["id"].is_string()) {
      t.id = r["id"].get<std::string>();
    } else if (r["id"].is_number_integer()) {
      t.id = std::to_string(r["id"].get<long long>());
    } else {
      throw ValidationError(i, "id", "must be a string or an integer");
    }
    if (text::trim(t.id).empty()) throw ValidationError(i, "id", "empty");
    for (auto [field, target] : {std::pair{"ru", &t.ru}, std::pair{"no", &t.no}, std::pair{"rn", &t.rn}}) {
      if (!r.contains(field) || !r[field].is_string()) throw ValidationError(i, field, "missing or not a string");
      *target = text::trim(r[field].get<std::string>());
      if (target->empty()) throw ValidationError(i, field, "empty sentence");
    }
    if (!ids.insert(t.id).second) throw ValidationError(i, "id", "duplicate id '" + t.id + "'");
    out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<TranslationTriplet> bundled_fixture() { return load_benchmark(bundled::bench_fixture); }

inline const std::string& source_of(const TranslationTriplet& t, Direction d) {
  switch (d) {
    case Direction::RuToRn: return t.ru;
    case Direction::NoToRn: return t.no;
    case Direction::RnToRu:
    case Direction::RnToNo: return t.rn;
  }
  return t.rn;
}

/// Gold side: rn for translations into Russenorsk, otherwise the target.
inline const std::string& reference_of(const TranslationTriplet& t, Direction d) {
  switch (d) {
    case Direction::RuToRn:
    case Direction::NoToRn: return t.rn;
    case Direction::RnToRu: return t.ru;
    case Direction::RnToNo: return t.no;
  }
  return t.rn;
}

// ---------------------------------------------------------------------------
// Ablations

enum class Ablation { Full, NoExamples, RulesOnly, None };

/// Table row order.
inline constexpr std::array kAllAblations = {Ablation::Full, Ablation::NoExamples, Ablation::RulesOnly,
                                             Ablation::None};

inline constexpr std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::NoExamples: return "noex";
    case Ablation::RulesOnly: return "rules";
    case Ablation::None: return "none";
  }
  return "none";
}

inline constexpr std::string_view row_label(Ablation a) {
  switch (a) {
    case Ablation::Full: return "dictionary + examples + rules";
    case Ablation::NoExamples: return "-- examples";
    case Ablation::RulesOnly: return "rules only";
    case Ablation::None: return "none (memory test)";
  }
  return "";
}

inline std::optional<Ablation> parse_ablation(std::string_view s) {
  for (auto a : kAllAblations) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

struct AblationConfig {
  Ablation label = Ablation::Full;
  bool include_lexicon = true;
  bool include_examples = true;
  bool include_rules = true;
};

inline constexpr AblationConfig config_for(Ablation a) {
  switch (a) {
    case Ablation::Full: return {a, true, true, true};
    case Ablation::NoExamples: return {a, true, false, true};
    case Ablation::RulesOnly: return {a, false, false, true};
    case Ablation::None: return {a, false, false, false};
  }
  return {a, false, false, false};
}

// ---------------------------------------------------------------------------
// Baseline

struct BaselineScores {
  metric::ChrfScore no_to_rn;  ///< hypothesis no, reference rn
  metric::ChrfScore rn_to_no;  ///< hypothesis rn, reference no
};

/// Model-free lower bound: the Norwegian and Russenorsk sides scored
/// against each other in both orientations.
inline BaselineScores baseline(const std::vector<TranslationTriplet>& triplets,
                               const metric::ChrfParams& params = {}) {
  if (triplets.empty()) throw InvalidArgument("baseline needs at least one triplet");
  std::vector<std::pair<std::string, std::string>> no_rn, rn_no;
  for (const auto& t : triplets) {
    no_rn.emplace_back(t.no, t.rn);
    rn_no.emplace_back(t.rn, t.no);
  }
  return {metric::corpus_chrf(no_rn, params), metric::corpus_chrf(rn_no, params)};
}

// ---------------------------------------------------------------------------
// Prompt resources

struct BenchResources {
  std::vector<lexicon::LexiconEntry> lexicon;
  std::vector<std::string> examples;
  std::string rules;
  agent::PromptTemplates templates = agent::default_templates();
};

/// One line per lexicon example: rn | no | ru, skipping absent sides.
inline std::vector<std::string> examples_from_lexicon(const std::vector<lexicon::LexiconEntry>& entries) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (!e.example_rn) continue;
    std::string line = "Russenorsk: " + *e.example_rn;
    if (e.example_no) line += " | Norwegian: " + *e.example_no;
    if (e.example_ru) line += " | Russian: " + *e.example_ru;
    if (seen.insert(line).second) out.push_back(std::move(line));
  }
  return out;
}

/// Bulleted rule list built from the transducer's rule descriptions.
inline std::string describe_rules(const std::vector<transducer::RewriteRule>& rules) {
  std::string out;
  for (const auto& r : rules) {
    out += "- ";
    out += r.description().empty() ? r.id() : r.description();
    out += '\n';
  }
  return out;
}

inline agent::AssembledPrompt translation_prompt(const TranslationTriplet& t, Direction d, Ablation a,
                                                 const BenchResources& resources) {
  const auto cfg = config_for(a);
  agent::PromptBundle bundle;
  bundle.task = agent::Task::Translate;
  bundle.include_lexicon = cfg.include_lexicon;
  bundle.include_examples = cfg.include_examples;
  bundle.include_rules = cfg.include_rules;
  bundle.direction = d;
  bundle.source_text = source_of(t, d);
  agent::PromptResources res;
  res.lexicon = std::span<const lexicon::LexiconEntry>(resources.lexicon);
  res.examples = std::span<const std::string>(resources.examples);
  res.rules = resources.rules;
  return agent::assemble_prompt(bundle, res, resources.templates);
}

/// First non-empty line of a model answer, trimmed.
inline std::string clean_translation(std::string_view answer) {
  std::istringstream in{std::string(answer)};
  std::string line;
  while (std::getline(in, line)) {
    auto t = text::trim(line);
    if (!t.empty()) return t;
  }
  return {};
}

// ---------------------------------------------------------------------------
// Report

struct DetailRecord {
  std::string id;
  Direction direction = Direction::RuToRn;
  Ablation ablation = Ablation::Full;
  std::string source;
  std::string hypothesis;
  std::string reference;
  double sentence_chrf = 0.0;
  bool cache_hit = false;
};

struct CellResult {
  Direction direction = Direction::RuToRn;
  Ablation ablation = Ablation::Full;
  std::optional<metric::ChrfScore> score;  ///< absent when the cell failed
  std::string error;
  std::size_t sentences = 0;
  std::size_t failed_sentences = 0;
};

/// Published OPUS-MT ceiling scores, 0..100.
inline constexpr double kOpusRuToNo = 41.8;
inline constexpr double kOpusNoToRu = 40.0;

/// Asymmetry, in chrF points, above which an into-Russenorsk score under the
/// full prompt is flagged as possible prompt leakage.
inline constexpr double kLeakageThreshold = 15.0;

struct BenchReport {
  std::string model;
  std::string timestamp;
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  bool cache_enabled = false;
  std::size_t sentence_count = 0;
  std::optional<BaselineScores> baseline;
  std::vector<CellResult> cells;
  std::vector<DetailRecord> details;

  double cache_hit_ratio() const {
    const auto total = cache_hits + cache_misses;
    return total == 0 ? 0.0 : static_cast<double>(cache_hits) / static_cast<double>(total);
  }

  const CellResult* find(Direction d, Ablation a) const {
    for (const auto& c : cells) {
      if (c.direction == d && c.ablation == a) return &c;
    }
    return nullptr;
  }

  std::optional<double> score(Direction d, Ablation a) const {
    const auto* c = find(d, a);
    if (c == nullptr || !c->score) return std::nullopt;
    return c->score->value;
  }
};

struct LeakageFlag {
  Direction direction;
  double score;
  double out_of_rn_floor;
  friend bool operator==(const LeakageFlag&, const LeakageFlag&) = default;
};

/// Full-prompt into-Russenorsk cells scoring more than the threshold above
/// the lowest full-prompt out-of-Russenorsk cell.
inline std::vector<LeakageFlag> leakage_flags(const BenchReport& report, double threshold = kLeakageThreshold) {
  std::optional<double> floor;
  for (auto d : agent::kAllDirections) {
    if (agent::translates_into_russenorsk(d)) continue;
    if (auto s = report.score(d, Ablation::Full)) floor = floor ? std::min(*floor, *s) : *s;
  }
  std::vector<LeakageFlag> flags;
  if (!floor) return flags;
  for (auto d : agent::kAllDirections) {
    if (!agent::translates_into_russenorsk(d)) continue;
    if (auto s = report.score(d, Ablation::Full); s && *s - *floor > threshold) flags.push_back({d, *s, *floor});
  }
  return flags;
}

inline bool is_flagged(const std::vector<LeakageFlag>& flags, Direction d, Ablation a) {
  return a == Ablation::Full &&
         std::any_of(flags.begin(), flags.end(), [&](const auto& f) { return f.direction == d; });
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point t = std::chrono::system_clock::now()) {
  const auto tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// ---------------------------------------------------------------------------
// Running

struct RunOptions {
  std::string model;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::size_t parallelism = 4;
  metric::ChrfParams chrf;
  std::optional<std::string> timestamp;  ///< fixed value for reproducible reports
  bool include_baseline = true;
};

/// Runs every (direction, ablation) cell, one request per sentence. A
/// failed sentence fails its cell; other cells are unaffected. Throws only
/// when every cell fails.
inline BenchReport run_matrix(const std::vector<TranslationTriplet>& triplets,
                              const std::vector<Direction>& directions, const std::vector<Ablation>& ablations,
                              agent::ChatClient& client, const BenchResources& resources,
                              const RunOptions& options) {
  if (triplets.empty()) throw InvalidArgument("benchmark must be non-empty");
  if (directions.empty() || ablations.empty()) throw InvalidArgument("need at least one direction and ablation");
  options.chrf.validate();

  struct Job {
    std::size_t cell;
    std::size_t sentence;
  };
  struct Outcome {
    std::optional<agent::ChatResponse> response;
    std::string error;
  };

  // Cells in table order regardless of the order requested.
  std::vector<std::pair<Direction, Ablation>> cells;
  for (auto a : kAllAblations) {
    if (std::find(ablations.begin(), ablations.end(), a) == ablations.end()) continue;
    for (auto d : agent::kAllDirections) {
      if (std::find(directions.begin(), directions.end(), d) != directions.end()) cells.emplace_back(d, a);
    }
  }

  std::vector<Job> jobs;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t s = 0; s < triplets.size(); ++s) jobs.push_back({c, s});
  }
  std::vector<Outcome> outcomes(jobs.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const auto [d, a] = cells[jobs[j].cell];
      try {
        const auto prompt = translation_prompt(triplets[jobs[j].sentence], d, a, resources);
        agent::ChatRequest request{options.model, prompt.system, prompt.user, options.temperature,
                                   options.max_tokens};
        outcomes[j].response = client.complete(request);
      } catch (const std::exception& e) {
        outcomes[j].error = e.what();
      }
    }
  };
  const auto threads = std::clamp<std::size_t>(options.parallelism, 1, std::max<std::size_t>(jobs.size(), 1));
  {
    std::vector<std::jthread> pool;
    for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
  }

  BenchReport report;
  report.model = options.model;
  report.timestamp = options.timestamp.value_or(utc_timestamp());
  report.sentence_count = triplets.size();
  report.cache_enabled = client.has_cache();
  if (options.include_baseline) report.baseline = baseline(triplets, options.chrf);

  std::size_t failed_cells = 0;
  std::string first_error;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto [d, a] = cells[c];
    CellResult cell{d, a, std::nullopt, {}, triplets.size(), 0};
    std::vector<DetailRecord> records;
    metric::NgramStats total(options.chrf.max_ngram_order);
    for (std::size_t s = 0; s < triplets.size(); ++s) {
      const auto& out = outcomes[c * triplets.size() + s];
      if (!out.response) {
        ++cell.failed_sentences;
        if (cell.error.empty()) cell.error = "sentence " + triplets[s].id + ": " + out.error;
        continue;
      }
      out.response->cache_hit ? ++report.cache_hits : ++report.cache_misses;
      DetailRecord r{triplets[s].id, d, a, source_of(triplets[s], d),
                     clean_translation(out.response->text), reference_of(triplets[s], d), 0.0,
                     out.response->cache_hit};
      const auto stats = metric::sentence_stats(r.hypothesis, r.reference, options.chrf);
      r.sentence_chrf = metric::chrf(stats, options.chrf).value;
      total += stats;
      records.push_back(std::move(r));
    }
    if (cell.failed_sentences == 0) {
      cell.score = metric::chrf(total, options.chrf);
    } else {
      ++failed_cells;
      if (first_error.empty()) first_error = cell.error;
    }
    report.cells.push_back(std::move(cell));
    for (auto& r : records) report.details.push_back(std::move(r));
  }
  if (failed_cells == cells.size()) throw BenchError("every cell failed; first error: " + first_error);
  return report;
}

/// Report holding only the scores of a {directions, baseline, rows} table
/// document, for rendering published numbers.
inline BenchReport report_from_table(std::string_view document) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  auto score = [](double v) {
    metric::ChrfScore s;
    s.value = v;
    return s;
  };
  BenchReport report;
  report.model = j.value("model", std::string("published"));
  try {
    std::vector<Direction> dirs;
    for (const auto& d : j.at("directions")) {
      const auto parsed = agent::parse_direction(d.get<std::string>());
      if (!parsed) throw ParseError("unknown direction '" + d.get<std::string>() + "'", 0);
      dirs.push_back(*parsed);
    }
    if (j.contains("baseline")) {
      report.baseline = BaselineScores{score(j["baseline"].at("no2rn").get<double>()),
                                       score(j["baseline"].at("rn2no").get<double>())};
    }
    for (const auto& row : j.at("rows")) {
      const auto a = parse_ablation(row.at("ablation").get<std::string>());
      if (!a) throw ParseError("unknown ablation '" + row.at("ablation").get<std::string>() + "'", 0);
      const auto values = row.at("scores").get<std::vector<double>>();
      if (values.size() != dirs.size()) throw ParseError("row width differs from the direction count", 0);
      for (std::size_t i = 0; i < dirs.size(); ++i) report.cells.push_back({dirs[i], *a, score(values[i]), {}, 0, 0});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad score table: ") + e.what(), 0);
  }
  return report;
}

inline BenchReport table2_report() { return report_from_table(bundled::table2_scores); }

// ---------------------------------------------------------------------------
// Rendering

namespace detail {

inline std::string fixed1(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << v;
  return os.str();
}

inline std::string column_label(Direction d) {
  const auto s = std::string(agent::to_string(d));  // e.g. ru2rn
  return s.substr(0, 2) + "->" + s.substr(3);
}

}  // namespace detail

/// Fixed-width table: baseline row first, then ablation rows in table
/// order. A trailing '!' marks a leakage flag, ERR a failed cell.
inline std::string render_text(const BenchReport& report) {
  constexpr std::size_t kFirst = 30, kCol = 8;
  const auto flags = leakage_flags(report);
  std::ostringstream os;
  auto cell = [&](std::string s) {
    os << std::string(kCol > s.size() ? kCol - s.size() : 1, ' ') << s;
  };
  os << std::left << std::setw(kFirst) << "Prompt contents" << std::right;
  for (auto d : agent::kAllDirections) cell(detail::column_label(d));
  os << '\n';

  if (report.baseline) {
    os << std::left << std::setw(kFirst) << "baseline (rn vs. no)" << std::right;
    cell("--");
    cell(detail::fixed1(report.baseline->no_to_rn.value));
    cell("--");
    cell(detail::fixed1(report.baseline->rn_to_no.value));
    os << '\n';
  }
  for (auto a : kAllAblations) {
    const bool present =
        std::any_of(report.cells.begin(), report.cells.end(), [&](const auto& c) { return c.ablation == a; });
    if (!present) continue;
    os << std::left << std::setw(kFirst) << row_label(a) << std::right;
    for (auto d : agent::kAllDirections) {
      const auto* c = report.find(d, a);
      if (c == nullptr) {
        cell("--");
      } else if (!c->score) {
        cell("ERR");
      } else {
        cell(detail::fixed1(c->score->value) + (is_flagged(flags, d, a) ? "!" : ""));
      }
    }
    os << '\n';
  }

  if (report.cells.empty() && !report.baseline) return os.str();
  os << '\n';
  for (const auto& f : flags) {
    os << "! possible prompt leakage: " << detail::column_label(f.direction) << " " << detail::fixed1(f.score)
       << " exceeds the lowest out-of-Russenorsk score " << detail::fixed1(f.out_of_rn_floor) << " by more than "
       << detail::fixed1(kLeakageThreshold) << '\n';
  }
  for (const auto& c : report.cells) {
    if (!c.score) {
      os << "ERR " << to_string(c.ablation) << " " << agent::to_string(c.direction) << ": " << c.error << '\n';
    }
  }
  os << "OPUS-MT reference: ru->no " << detail::fixed1(kOpusRuToNo) << ", no->ru " << detail::fixed1(kOpusNoToRu)
     << '\n';
  if (!report.model.empty()) os << "model: " << report.model << '\n';
  if (!report.timestamp.empty()) os << "timestamp: " << report.timestamp << '\n';
  if (report.cache_hits + report.cache_misses > 0) {
    os << "cache: " << report.cache_hits << " hits, " << report.cache_misses << " misses"
       << (report.cache_enabled ? "" : " (cache disabled)") << '\n';
  }
  return os.str();
}

inline nlohmann::ordered_json render_json(const BenchReport& report) {
  const auto flags = leakage_flags(report);
  nlohmann::ordered_json j;
  j["model"] = report.model;
  j["timestamp"] = report.timestamp;
  j["sentences"] = report.sentence_count;
  j["cache"] = {{"enabled", report.cache_enabled},
                {"hits", report.cache_hits},
                {"misses", report.cache_misses},
                {"hit_ratio", report.cache_hit_ratio()}};
  if (report.baseline) {
    j["baseline"] = {{"no2rn", report.baseline->no_to_rn.value}, {"rn2no", report.baseline->rn_to_no.value}};
  } else {
    j["baseline"] = nullptr;
  }
  j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : report.cells) {
    nlohmann::ordered_json cj;
    cj["direction"] = agent::to_string(c.direction);
    cj["ablation"] = to_string(c.ablation);
    if (c.score) {
      cj["chrf"] = c.score->value;
    } else {
      cj["chrf"] = nullptr;
      cj["error"] = c.error;
    }
    cj["sentences"] = c.sentences;
    cj["failed_sentences"] = c.failed_sentences;
    cj["leakage_flag"] = is_flagged(flags, c.direction, c.ablation);
    j["cells"].push_back(std::move(cj));
  }
  j["opus_mt"] = {{"ru2no", kOpusRuToNo}, {"no2ru", kOpusNoToRu}};
  return j;
}

/// One JSON object per line, one line per sentence per cell.
inline std::string render_details(const BenchReport& report) {
  std::string out;
  for (const auto& r : report.details) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["direction"] = agent::to_string(r.direction);
    j["ablation"] = to_string(r.ablation);
    j["source"] = r.source;
    j["hypothesis"] = r.hypothesis;
    j["reference"] = r.reference;
    j["sentence_chrf"] = r.sentence_chrf;
    j["cache_hit"] = r.cache_hit;
    out += j.dump();
    out += '\n';
  }
  return out;
}

/// Writes report.json, report.txt and detail.jsonl into `dir`.
inline void write_report(const BenchReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out || !(out << content)) throw Error("cannot write " + (dir / name).string());
  };
  write("report.json", render_json(report).dump(2) + "\n");
  write("report.txt", render_text(report));
  write("detail.jsonl", render_details(report));
}

}  // namespace rusnor::bench
