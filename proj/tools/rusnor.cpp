// rusnor command-line tool. Exit codes: 0 ok, 1 runtime failure, 2 usage,
// 3 invalid input data.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rusnor/http_transport.hpp"
#include "rusnor/rusnor.hpp"

namespace fs = std::filesystem;
using namespace rusnor;

namespace {

struct DataError : Error {
  using Error::Error;
};

std::string slurp(const std::string& path) {
  if (path == "-") {
    std::ostringstream os;
    os << std::cin.rdbuf();
    return os.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> lines_of(const std::string& content) {
  std::vector<std::string> out;
  std::istringstream in(content);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    if (auto t = text::trim(item); !t.empty()) out.push_back(t);
  }
  return out;
}

std::vector<lexicon::LexiconEntry> load_lexicon(const std::string& path, bool warn = true) {
  std::vector<lexicon::ParseWarning> warnings;
  auto entries = path.empty() ? lexicon::parse_lexicon(bundled::lexicon_fixture, &warnings)
                              : lexicon::parse_lexicon(slurp(path), &warnings);
  if (warn) {
    for (const auto& w : warnings) std::cerr << "warning: record " << w.index << ": " << w.message << '\n';
  }
  return entries;
}

std::optional<lexicon::Origin> origin_arg(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (auto o = lexicon::parse_origin(s)) return o;
  throw CLI::ValidationError("--origin", "unknown origin '" + s + "'");
}

std::optional<lexicon::PartOfSpeech> pos_arg(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (auto p = lexicon::parse_pos(s)) return p;
  throw CLI::ValidationError("--pos", "unknown part of speech '" + s + "'");
}

std::string fixed(double v, int precision = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

// ---------------------------------------------------------------------------

void cmd_chrf(const std::string& hyp, const std::string& ref, bool files, const metric::ChrfParams& params) {
  if (!files) {
    std::cout << fixed(metric::sentence_chrf(hyp, ref, params).value, 4) << '\n';
    return;
  }
  const auto h = lines_of(slurp(hyp)), r = lines_of(slurp(ref));
  if (h.size() != r.size()) {
    throw DataError("hypothesis and reference files differ in length: " + std::to_string(h.size()) + " vs " +
                    std::to_string(r.size()) + " lines");
  }
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < h.size(); ++i) pairs.emplace_back(h[i], r[i]);
  std::cout << fixed(metric::corpus_chrf(pairs, params).value, 4) << '\n';
}

struct BenchArgs {
  std::string benchmark;
  std::string endpoint;
  std::string ablations = "full,noex,rules,none";
  std::string directions = "ru2rn,no2rn,rn2ru,rn2no";
  std::string out = "bench-out";
  std::string cache_dir = ".rusnor-cache";
  bool no_cache = false;
  std::string mock_fixtures;
  std::string lexicon;
  std::size_t parallelism = 4;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::string timestamp;
};

std::vector<bench::TranslationTriplet> load_triplets(const std::string& path) {
  return path.empty() ? bench::bundled_fixture() : bench::load_benchmark(slurp(path));
}

void cmd_bench_run(const BenchArgs& a) {
  std::vector<agent::Direction> dirs;
  for (const auto& s : split_list(a.directions)) {
    auto d = agent::parse_direction(s);
    if (!d) throw CLI::ValidationError("--directions", "unknown direction '" + s + "'");
    dirs.push_back(*d);
  }
  std::vector<bench::Ablation> abls;
  for (const auto& s : split_list(a.ablations)) {
    auto x = bench::parse_ablation(s);
    if (!x) throw CLI::ValidationError("--ablations", "unknown ablation '" + s + "'");
    abls.push_back(*x);
  }
  const auto triplets = load_triplets(a.benchmark);

  bench::RunOptions opt;
  opt.parallelism = a.parallelism;
  opt.temperature = a.temperature;
  opt.max_tokens = a.max_tokens;
  if (!a.timestamp.empty()) opt.timestamp = a.timestamp;

  std::shared_ptr<agent::ChatBackend> backend;
  if (!a.mock_fixtures.empty()) {
    const auto j = nlohmann::json::parse(slurp(a.mock_fixtures));
    backend = agent::MockBackend::from_fixtures(j.get<std::map<std::string, std::string>>());
    opt.model = "mock";
  } else {
    if (a.endpoint.empty()) throw CLI::ValidationError("--endpoint", "required unless --mock-fixtures is given");
    const auto endpoint = agent::EndpointConfig::from_json(slurp(a.endpoint));
    backend = agent::make_http_backend(endpoint);
    opt.model = endpoint.model;
  }
  std::optional<agent::ResponseCache> cache;
  if (!a.no_cache) cache.emplace(a.cache_dir);
  agent::ChatClient client(backend, std::move(cache));

  bench::BenchResources res;
  res.lexicon = load_lexicon(a.lexicon);
  res.examples = bench::examples_from_lexicon(res.lexicon);
  res.rules = bench::describe_rules(transducer::default_rules());

  const auto report = bench::run_matrix(triplets, dirs, abls, client, res, opt);
  bench::write_report(report, a.out);
  std::cout << bench::render_text(report);
  std::cerr << "wrote " << (fs::path(a.out) / "report.json").string() << '\n';
}

void cmd_bench_baseline(const std::string& path, bool json) {
  const auto t = load_triplets(path);
  const auto b = bench::baseline(t);
  if (json) {
    nlohmann::ordered_json j{{"sentences", t.size()}, {"no2rn", b.no_to_rn.value}, {"rn2no", b.rn_to_no.value}};
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::cout << "sentences: " << t.size() << "\n"
            << "no->rn (hyp no, ref rn): " << fixed(b.no_to_rn.value) << "\n"
            << "rn->no (hyp rn, ref no): " << fixed(b.rn_to_no.value) << '\n';
}

void cmd_lexicon_stats(const std::vector<lexicon::LexiconEntry>& entries) {
  const auto h = lexicon::origin_stats(entries);
  std::cout << "entries: " << entries.size() << '\n';
  for (auto o : lexicon::kAllOrigins) {
    if (h[o] > 0) std::cout << "  " << std::left << std::setw(12) << lexicon::to_string(o) << h[o] << '\n';
  }
}

void cmd_lexicon_synonyms(const std::vector<lexicon::LexiconEntry>& entries) {
  for (const auto& g : lexicon::group_synonyms(entries)) {
    std::cout << g.concept_key << " [" << lexicon::to_string(g.origin_profile) << "]:";
    for (auto i : g.members) {
      std::cout << ' ' << entries[i].form << " (" << lexicon::to_string(entries[i].origin) << ')';
    }
    std::cout << '\n';
  }
}

void cmd_adapt(const std::string& word, const std::string& source, const std::string& pos, std::size_t top,
               bool trace) {
  transducer::SourceLanguage src;
  std::string input = word;
  if (source == "no") {
    src = transducer::SourceLanguage::Norwegian;
  } else if (source == "ru") {
    src = transducer::SourceLanguage::Russian;
    if (std::any_of(word.begin(), word.end(), [](char c) { return static_cast<unsigned char>(c) >= 0x80; })) {
      input = transducer::transliterate(word);
    }
  } else {
    throw CLI::ValidationError("--source", "expected no or ru");
  }
  const auto cs = transducer::adapt(input, src, pos_arg(pos));
  for (std::size_t i = 0; i < cs.size() && i < top; ++i) {
    std::cout << cs[i].form;
    if (trace) {
      std::cout << "  ";
      for (const auto& s : cs[i].trace.steps) std::cout << " " << s.rule_id << ":" << s.before << ">" << s.after;
    }
    std::cout << '\n';
  }
}

coverage::CoverageMatrix matrix_arg(const std::string& path) {
  return path.empty() ? coverage::table1_matrix() : coverage::load_matrix(slurp(path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Russenorsk reconstruction toolkit"};
  app.require_subcommand(1);

  // chrf
  auto* chrf = app.add_subcommand("chrf", "chrF between a hypothesis and a reference");
  std::string hyp, ref;
  bool files = false;
  metric::ChrfParams params;
  chrf->add_option("hypothesis", hyp, "hypothesis text (or file with --files)")->required();
  chrf->add_option("reference", ref, "reference text (or file with --files)")->required();
  chrf->add_flag("--files", files, "arguments are line-aligned files; prints corpus chrF");
  chrf->add_option("--beta", params.beta, "recall weight")->capture_default_str();
  chrf->add_option("--order", params.max_ngram_order, "max character n-gram order")->capture_default_str();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "translation benchmark");
  bench_cmd->require_subcommand(1);
  BenchArgs ba;
  auto* run = bench_cmd->add_subcommand("run", "run the direction x ablation matrix");
  run->add_option("--benchmark", ba.benchmark, "triplet JSON (default: bundled fixture)");
  run->add_option("--endpoint", ba.endpoint, "endpoint config JSON {base_url, model, timeout_seconds}");
  run->add_option("--mock-fixtures", ba.mock_fixtures, "JSON object mapping prompt text to answer; no network");
  run->add_option("--ablations", ba.ablations)->capture_default_str();
  run->add_option("--directions", ba.directions)->capture_default_str();
  run->add_option("--out", ba.out)->capture_default_str();
  run->add_option("--cache-dir", ba.cache_dir)->capture_default_str();
  run->add_flag("--no-cache", ba.no_cache);
  run->add_option("--lexicon", ba.lexicon, "vocabulary JSON for the prompt (default: bundled fixture)");
  run->add_option("--parallelism", ba.parallelism)->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--temperature", ba.temperature)->capture_default_str();
  run->add_option("--max-tokens", ba.max_tokens)->capture_default_str();
  run->add_option("--timestamp", ba.timestamp, "fixed report timestamp");

  auto* base = bench_cmd->add_subcommand("baseline", "rn vs. no chrF without a model");
  std::string base_file;
  bool base_json = false;
  base->add_option("--benchmark", base_file, "triplet JSON (default: bundled fixture)");
  base->add_flag("--json", base_json);

  auto* table = bench_cmd->add_subcommand("table", "render a score table document");
  std::string table_file;
  table->add_option("--scores", table_file, "{directions, baseline, rows} JSON (default: bundled published scores)");

  // lexicon
  auto* lex = app.add_subcommand("lexicon", "vocabulary tools");
  lex->require_subcommand(1);
  std::string lex_file;
  auto* validate = lex->add_subcommand("validate", "parse and check a vocabulary file");
  validate->add_option("file", lex_file)->required();
  auto* query = lex->add_subcommand("query", "filter entries");
  std::string q_origin, q_pos, q_form, q_gloss;
  query->add_option("file", lex_file, "vocabulary JSON (default: bundled fixture)");
  query->add_option("--origin", q_origin);
  query->add_option("--pos", q_pos);
  query->add_option("--form", q_form, "substring of form or variant");
  query->add_option("--gloss", q_gloss, "substring of any gloss");
  auto* stats = lex->add_subcommand("stats", "origin histogram");
  stats->add_option("file", lex_file, "vocabulary JSON (default: bundled fixture)");
  auto* syn = lex->add_subcommand("synonyms", "synonym groups and their origin profile");
  syn->add_option("file", lex_file, "vocabulary JSON (default: bundled fixture)");

  // adapt / translit
  auto* adapt = app.add_subcommand("adapt", "candidate Russenorsk forms for a source word");
  std::string word, source = "no", pos;
  std::size_t top = 10;
  bool trace = false;
  adapt->add_option("word", word)->required();
  adapt->add_option("--source", source, "no or ru")->capture_default_str();
  adapt->add_option("--pos", pos);
  adapt->add_option("--top", top)->capture_default_str();
  adapt->add_flag("--trace", trace, "print the rule trace");

  auto* translit = app.add_subcommand("translit", "romanize Cyrillic text");
  std::string cyr;
  translit->add_option("text", cyr)->required();

  // coverage
  auto* cov = app.add_subcommand("coverage", "hypothesis coverage against the catalog");
  cov->require_subcommand(1);
  auto* match = cov->add_subcommand("match", "score a model response against the catalog");
  std::string response_file, label = "response", catalog_file;
  bool cov_json = false;
  match->add_option("response", response_file, "model response text, - for stdin")->required();
  match->add_option("--label", label)->capture_default_str();
  match->add_option("--catalog", catalog_file, "catalog JSON (default: bundled)");
  match->add_flag("--json", cov_json);
  auto* render = cov->add_subcommand("render", "render a coverage matrix");
  std::string matrix_file, overrides_file;
  render->add_option("--matrix", matrix_file, "{columns, cells} JSON (default: bundled published matrix)");
  render->add_option("--overrides", overrides_file, "manual verdict overrides JSON");
  render->add_flag("--json", cov_json);

  // prompt
  auto* prompt = app.add_subcommand("prompt", "print an assembled prompt");
  std::string task = "origin", direction, source_text;
  bool p_lex = false, p_ex = false, p_rules = false, fictitious = false;
  prompt->add_option("--task", task, "origin, phonmorph, grammar or translate")->capture_default_str();
  prompt->add_flag("--lexicon", p_lex);
  prompt->add_flag("--examples", p_ex);
  prompt->add_flag("--rules", p_rules);
  prompt->add_flag("--fictitious", fictitious, "present the language as an invented pidgin");
  prompt->add_option("--direction", direction);
  prompt->add_option("--source", source_text, "sentence to translate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*chrf) {
      cmd_chrf(hyp, ref, files, params);
    } else if (*run) {
      cmd_bench_run(ba);
    } else if (*base) {
      cmd_bench_baseline(base_file, base_json);
    } else if (*table) {
      std::cout << bench::render_text(table_file.empty() ? bench::table2_report()
                                                         : bench::report_from_table(slurp(table_file)));
    } else if (*validate) {
      const auto entries = load_lexicon(lex_file);
      std::cout << entries.size() << " entries OK\n";
    } else if (*query) {
      lexicon::QueryFilter f;
      f.origin = origin_arg(q_origin);
      f.pos = pos_arg(q_pos);
      if (!q_form.empty()) f.form_contains = q_form;
      if (!q_gloss.empty()) f.gloss_contains = q_gloss;
      std::cout << lexicon::serialize_lexicon(lexicon::query(load_lexicon(lex_file), f));
    } else if (*stats) {
      cmd_lexicon_stats(load_lexicon(lex_file));
    } else if (*syn) {
      cmd_lexicon_synonyms(load_lexicon(lex_file));
    } else if (*adapt) {
      cmd_adapt(word, source, pos, top, trace);
    } else if (*translit) {
      std::cout << transducer::transliterate(cyr) << '\n';
    } else if (*match) {
      const auto catalog = catalog_file.empty() ? coverage::default_catalog() : coverage::parse_catalog(slurp(catalog_file));
      coverage::CoverageMatrix m(catalog);
      m.add_column(label, coverage::match_hypotheses(agent::extract_hypotheses(slurp(response_file)), catalog));
      std::cout << (cov_json ? coverage::render_json(m).dump(2) + "\n" : coverage::render_text(m));
    } else if (*render) {
      auto m = matrix_arg(matrix_file);
      if (!overrides_file.empty()) m = coverage::apply_overrides(m, coverage::parse_overrides(slurp(overrides_file)));
      std::cout << (cov_json ? coverage::render_json(m).dump(2) + "\n" : coverage::render_text(m));
    } else if (*prompt) {
      const auto t = agent::parse_task(task);
      if (!t) throw CLI::ValidationError("--task", "unknown task '" + task + "'");
      agent::PromptBundle b;
      b.task = *t;
      b.include_lexicon = p_lex;
      b.include_examples = p_ex;
      b.include_rules = p_rules;
      b.language_context = fictitious ? agent::LanguageContext::FictitiousPidgin : agent::LanguageContext::Russenorsk;
      if (!direction.empty()) {
        b.direction = agent::parse_direction(direction);
        if (!b.direction) throw CLI::ValidationError("--direction", "unknown direction '" + direction + "'");
      }
      if (!source_text.empty()) b.source_text = source_text;
      const auto entries = load_lexicon("", false);
      const auto examples = bench::examples_from_lexicon(entries);
      agent::PromptResources r;
      r.lexicon = std::span<const lexicon::LexiconEntry>(entries);
      r.examples = std::span<const std::string>(examples);
      r.rules = bench::describe_rules(transducer::default_rules());
      const auto p = agent::assemble_prompt(b, r);
      std::cout << "=== system ===\n" << p.system << "\n=== user ===\n" << p.user << '\n';
    }
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\nRun with --help for more information.\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const DuplicateEntryError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
