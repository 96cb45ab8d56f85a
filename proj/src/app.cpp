#include "fairsumm/app.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "fairsumm/annotate.hpp"
#include "fairsumm/error.hpp"
#include "fairsumm/metrics.hpp"
#include "fairsumm/rng.hpp"
#include "fairsumm/stats.hpp"
#include "fairsumm/text.hpp"
#include "fairsumm/transport.hpp"

namespace fairsumm::app {

using nlohmann::json;

std::string format_number(std::optional<double> v) {
  if (!v) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, *v, std::chars_format::general, 6);
  return std::string(buf, res.ptr);
}

namespace {

// ---------------------------------------------------------------------------
// Small I/O helpers

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& file, const std::vector<std::string>& header) : out_(file, std::ios::trunc) {
    if (!out_) throw Error("cannot write " + file.string());
    row(header);
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out_ << ',';
      out_ << csv_field(fields[i]);
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw Error("cannot write " + file.string());
  return out;
}

void write_jsonl(const fs::path& file, const std::vector<json>& rows) {
  auto out = open_out(file);
  for (const auto& r : rows) out << r.dump() << '\n';
}

std::vector<json> read_jsonl(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("missing input " + file.string());
  std::vector<json> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw ValidationError(file.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return rows;
}

void ensure_out_dir(const RunConfig& c) { fs::create_directories(c.paths.out_dir); }

fs::path out_file(const RunConfig& c, std::string_view name) { return c.paths.out_dir / name; }

struct LoadedCorpus {
  corpus::ArticleStore store;
  std::vector<corpus::SkipRecord> skipped;
  std::size_t lines = 0;
};

LoadedCorpus load_articles(const RunConfig& c) {
  std::ifstream in(c.paths.articles);
  if (!in) throw ValidationError("cannot open " + c.paths.articles.string());
  auto read = corpus::read_articles(in);
  LoadedCorpus out;
  out.skipped = std::move(read.skipped);
  out.lines = read.lines;
  for (auto& a : read.articles) {
    if (out.store.find(a.id) != nullptr) {
      out.skipped.push_back({0, a.id, "duplicate article id"});
      continue;
    }
    out.store.add(std::move(a));
  }
  return out;
}

std::vector<corpus::Event> load_events(const RunConfig& c) {
  const fs::path file = out_file(c, "events.jsonl");
  std::ifstream in(file);
  if (!in) throw ValidationError("missing " + file.string() + " (run build-corpus first)");
  return corpus::read_events(in);
}

harness::GridSpec grid_for(const RunConfig& c, const CommandOptions& o) {
  harness::GridSpec g = c.grid;
  if (o.seed) g.seeds = {*o.seed};
  if (g.models.empty()) throw ValidationError("grid.models is empty");
  return g;
}

std::uint64_t base_seed(const RunConfig& c, const CommandOptions& o) { return o.seed.value_or(c.seed); }

// ---------------------------------------------------------------------------
// Endpoint wiring

struct AnnotatorSetup {
  std::shared_ptr<Transport> transport;
  AnnotatorEndpoint endpoint;
};

AnnotatorSetup make_annotator(const RunConfig& c, const CommandOptions& o) {
  AnnotatorSetup s;
  s.endpoint.timeout_ms = c.endpoints.timeout_ms;
  s.endpoint.max_retries = c.endpoints.max_retries;
  s.endpoint.max_parallel = c.endpoints.max_parallel;
  s.endpoint.bearer_token = c.endpoints.bearer_token;
  if (o.stub_annotators) {
    if (c.stubs.annotator == "replay") {
      s.transport = std::make_shared<ReplayTransport>(c.paths.annotator_fixture);
      s.endpoint.base_url = "replay:" + c.paths.annotator_fixture.string();
      s.endpoint.model_version = c.endpoints.annotator_model_version;
    } else {
      StubAnnotatorTransport::Options opt;
      opt.mode = c.stubs.annotator == "constant" ? StubAnnotatorTransport::Mode::kConstant
                                                 : StubAnnotatorTransport::Mode::kHashPartition;
      opt.sentiment = c.stubs.sentiment;
      opt.political = c.stubs.political;
      opt.document_confidence = c.stubs.document_confidence;
      opt.entity_type = c.stubs.entity_type;
      auto stub = std::make_shared<StubAnnotatorTransport>(opt);
      s.endpoint.base_url = "stub:" + c.stubs.annotator;
      s.endpoint.model_version = stub->model_version();
      s.transport = std::move(stub);
    }
  } else {
    if (c.endpoints.annotator.empty()) {
      throw ValidationError("no annotator endpoint configured (set endpoints.annotator or use --stub-annotators)");
    }
    s.endpoint.base_url = c.endpoints.annotator;
    s.endpoint.model_version = c.endpoints.annotator_model_version;
    s.transport = std::make_shared<HttpTransport>(c.endpoints.annotator, c.endpoints.timeout_ms,
                                                  c.endpoints.bearer_token);
  }
  s.endpoint.validate();
  return s;
}

std::shared_ptr<Transport> stub_generator(const RunConfig& c, const std::string& salt) {
  harness::StubGeneratorTransport::Options opt;
  opt.salt = salt;
  if (c.stubs.generator == "echo") {
    opt.mode = harness::StubGeneratorTransport::Mode::kEcho;
  } else if (c.stubs.generator == "fail") {
    opt.mode = harness::StubGeneratorTransport::Mode::kFail;
  }
  return std::make_shared<harness::StubGeneratorTransport>(opt);
}

std::shared_ptr<harness::TextGenerator> make_generator(const RunConfig& c, const CommandOptions& o,
                                                       const std::string& url, int retries,
                                                       const std::string& stub_salt) {
  if (o.stub_generator) {
    return std::make_shared<harness::GenerationClient>(stub_generator(c, stub_salt), retries);
  }
  if (url.empty()) {
    throw ValidationError("no generation endpoint configured (set endpoints or use --stub-generator)");
  }
  return std::make_shared<harness::GenerationClient>(
      std::make_shared<HttpTransport>(url, c.endpoints.timeout_ms, c.endpoints.bearer_token), retries);
}

// ---------------------------------------------------------------------------
// Report rows

struct ReportRow {
  metrics::FairnessReport report;
  std::uint64_t seed = 0;
  std::string run_key;
};

json report_json(const ReportRow& r) {
  const auto& f = r.report;
  json j{{"event_id", f.event_id},
         {"model_id", f.model_id},
         {"prompt_id", f.prompt_id},
         {"ordering", f.ordering},
         {"seed", r.seed},
         {"run_key", r.run_key}};
  for (auto m : metrics::kAllMetrics) {
    const auto v = f.value(m);
    j[std::string(metrics::metric_name(m))] = v ? json(*v) : json(nullptr);
  }
  return j;
}

ReportRow report_from_json(const json& j) {
  ReportRow r;
  try {
    r.report.event_id = j.at("event_id").get<std::string>();
    r.report.model_id = j.at("model_id").get<std::string>();
    r.report.prompt_id = j.at("prompt_id").get<std::string>();
    r.report.ordering = j.at("ordering").get<std::string>();
    r.seed = j.value("seed", std::uint64_t{0});
    r.run_key = j.value("run_key", std::string());
    r.report.neutralisation = j.at("neutralisation").get<double>();
    r.report.equal_fairness = j.at("equal_fairness").get<double>();
    r.report.ratio_fairness = j.at("ratio_fairness").get<double>();
    r.report.entity_coverage = j.at("entity_coverage").get<double>();
    if (j.contains("entity_sentiment") && !j["entity_sentiment"].is_null()) {
      r.report.entity_sentiment = j["entity_sentiment"].get<double>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report row: ") + e.what());
  }
  return r;
}

std::vector<ReportRow> load_reports(const RunConfig& c, const CommandOptions& o) {
  const fs::path file = o.input.empty() ? out_file(c, "fairness_report.jsonl") : o.input;
  std::vector<ReportRow> rows;
  for (const auto& j : read_jsonl(file)) rows.push_back(report_from_json(j));
  return rows;
}

std::vector<std::string> report_header() {
  std::vector<std::string> h = {"event_id", "model_id", "prompt_id", "ordering", "seed"};
  for (auto m : metrics::kAllMetrics) h.emplace_back(metrics::metric_name(m));
  return h;
}

std::vector<std::string> report_fields(const ReportRow& r) {
  const auto& f = r.report;
  std::vector<std::string> v = {f.event_id, f.model_id, f.prompt_id, f.ordering, std::to_string(r.seed)};
  for (auto m : metrics::kAllMetrics) v.push_back(format_number(f.value(m)));
  return v;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string size_level(const harness::ModelSpec& m) {
  return m.size_class.empty() ? format_number(m.size) : m.size_class;
}

}  // namespace

// ---------------------------------------------------------------------------
// Commands

int cmd_build_corpus(const RunConfig& c, std::ostream& log) {
  ensure_out_dir(c);
  auto loaded = load_articles(c);
  const auto events = corpus::cluster_articles(loaded.store.articles(), c.corpus);
  const auto filtered = corpus::filter_events(events, loaded.store, c.corpus);

  auto ev = open_out(out_file(c, "events.jsonl"));
  corpus::write_events(ev, filtered.retained);
  auto dr = open_out(out_file(c, "drop_report.jsonl"));
  corpus::write_drop_report(dr, filtered.dropped);
  auto sk = open_out(out_file(c, "skip_report.jsonl"));
  corpus::write_skip_report(sk, loaded.skipped);

  log << "build-corpus: " << loaded.store.size() << " articles, " << loaded.skipped.size()
      << " skipped, " << events.size() << " clusters, " << filtered.retained.size() << " events kept, "
      << filtered.dropped.size() << " dropped\n";
  const bool all_failed = loaded.store.size() == 0 && !loaded.skipped.empty();
  return all_failed ? kExitPartial : kExitOk;
}

int cmd_summarise(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  ensure_out_dir(c);
  const auto loaded = load_articles(c);
  const auto events = load_events(c);
  const auto grid = grid_for(c, o);
  // Retries happen per cell inside run_grid so each record counts its own attempts.
  const harness::GeneratorFactory factory = [&](const harness::ModelSpec& m) {
    return make_generator(c, o, m.endpoint.empty() ? c.endpoints.generation : m.endpoint, 0, m.id);
  };
  const auto outcome =
      harness::run_grid(events, loaded.store, grid, factory, out_file(c, "runs.jsonl"), o.resume);
  log << "summarise: " << outcome.executed << " executed, " << outcome.skipped << " skipped, "
      << outcome.failed << " failed\n";
  return outcome.failed > 0 ? kExitPartial : kExitOk;
}

namespace {

struct EvaluationInputs {
  LoadedCorpus corpus;
  std::vector<corpus::Event> events;
  std::map<std::string, const corpus::Event*> event_by_id;
  std::vector<harness::GridCell> cells;
  std::map<std::string, harness::RunRecord> runs;
};

EvaluationInputs load_evaluation_inputs(const RunConfig& c, const CommandOptions& o) {
  EvaluationInputs in;
  in.corpus = load_articles(c);
  in.events = load_events(c);
  for (const auto& e : in.events) in.event_by_id[e.id] = &e;
  in.cells = harness::expand_grid(in.events, grid_for(c, o));
  for (auto& r : harness::read_runs(out_file(c, "runs.jsonl"))) in.runs[r.run_key] = std::move(r);
  return in;
}

}  // namespace

int cmd_annotate(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  ensure_out_dir(c);
  const auto in = load_evaluation_inputs(c, o);
  auto setup = make_annotator(c, o);
  AnnotationCache cache(c.paths.cache);
  AnnotatorClient client(setup.endpoint, setup.transport, &cache);

  std::size_t failures = 0;
  std::map<std::string, pipeline::EventContext> contexts;
  for (const auto& e : in.events) {
    try {
      contexts.emplace(e.id, pipeline::prepare_event(e, in.corpus.store, client, c.metrics));
    } catch (const Error& err) {
      ++failures;
      log << "annotate: event " << e.id << ": " << err.what() << '\n';
    }
  }
  for (const auto& cell : in.cells) {
    auto it = in.runs.find(harness::run_key(cell));
    if (it == in.runs.end() || !it->second.ok) continue;
    auto ctx = contexts.find(cell.event_id);
    if (ctx == contexts.end()) continue;
    try {
      pipeline::evaluate_fairness(ctx->second, it->second.summary, client, c.metrics);
    } catch (const Error& err) {
      ++failures;
      log << "annotate: run " << it->first.substr(0, 12) << ": " << err.what() << '\n';
    }
  }
  log << "annotate: cache holds " << cache.size() << " records, " << client.transport_calls()
      << " transport calls, " << client.cache_hits() << " cache hits\n";
  return failures > 0 ? kExitPartial : kExitOk;
}

int cmd_evaluate(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  ensure_out_dir(c);
  const auto in = load_evaluation_inputs(c, o);
  auto setup = make_annotator(c, o);
  AnnotationCache cache(c.paths.cache);
  AnnotatorClient client(setup.endpoint, setup.transport, &cache);

  std::vector<json> errors;
  std::map<std::string, pipeline::EventContext> contexts;
  for (const auto& e : in.events) {
    try {
      contexts.emplace(e.id, pipeline::prepare_event(e, in.corpus.store, client, c.metrics));
    } catch (const Error& err) {
      errors.push_back({{"event_id", e.id}, {"reason", std::string("event preparation failed: ") + err.what()}});
    }
  }

  std::vector<ReportRow> fairness;
  std::vector<json> fairness_json;
  std::vector<json> quality_json;
  std::vector<json> gaps;

  CsvWriter qcsv(out_file(c, "quality_report.csv"),
                 {"event_id", "model_id", "prompt_id", "ordering", "seed", "rouge1_p", "rouge1_r",
                  "rouge1_f", "rouge2_p", "rouge2_r", "rouge2_f", "rougeL_p", "rougeL_r", "rougeL_f",
                  "rouge_degenerate", "input_words", "summary_words", "length_bucket", "bertscore",
                  "alignscore"});

  for (const auto& cell : in.cells) {
    const std::string key = harness::run_key(cell);
    json ident{{"run_key", key},
               {"event_id", cell.event_id},
               {"model_id", cell.model_id},
               {"prompt_id", harness::template_name(cell.template_id)},
               {"ordering", corpus::Ordering::kind_name(cell.ordering)},
               {"seed", cell.params.seed}};
    auto fail = [&](std::string reason) {
      json e = ident;
      e["reason"] = std::move(reason);
      errors.push_back(std::move(e));
    };

    const auto run = in.runs.find(key);
    if (run == in.runs.end()) {
      fail("missing summary");
      continue;
    }
    if (!run->second.ok) {
      fail("generation failed: " + run->second.error);
      continue;
    }
    const auto ctx = contexts.find(cell.event_id);
    if (ctx == contexts.end()) {
      fail("event unavailable");
      continue;
    }
    const std::string& summary = run->second.summary;

    pipeline::FairnessOutcome outcome;
    try {
      outcome = pipeline::evaluate_fairness(ctx->second, summary, client, c.metrics);
    } catch (const Error& err) {
      fail(err.what());
      continue;
    }
    ReportRow row;
    row.report = outcome.report;
    row.report.event_id = cell.event_id;
    row.report.model_id = cell.model_id;
    row.report.prompt_id = std::string(harness::template_name(cell.template_id));
    row.report.ordering = std::string(corpus::Ordering::kind_name(cell.ordering));
    row.seed = cell.params.seed;
    row.run_key = key;
    json fj = report_json(row);
    fj["entities"] = outcome.selected_entities;
    fairness_json.push_back(std::move(fj));
    fairness.push_back(row);
    if (outcome.gap_reason) {
      json g = ident;
      g["reason"] = *outcome.gap_reason;
      gaps.push_back(std::move(g));
    }

    const auto q = pipeline::evaluate_quality(ctx->second, summary);
    json qj = ident;
    auto put = [&](const char* name, const quality::RougeScore& s) {
      qj[std::string(name) + "_p"] = s.precision;
      qj[std::string(name) + "_r"] = s.recall;
      qj[std::string(name) + "_f"] = s.f1;
    };
    put("rouge1", q.rouge1);
    put("rouge2", q.rouge2);
    put("rougeL", q.rougeL);
    const bool degenerate = q.rouge1.degenerate || q.rouge2.degenerate || q.rougeL.degenerate;
    qj["rouge_degenerate"] = degenerate;
    qj["input_words"] = q.input_words;
    qj["summary_words"] = q.summary_words;
    qj["length_bucket"] = quality::bucket_name(q.bucket);
    qj["bertscore"] = nullptr;
    qj["alignscore"] = nullptr;
    quality_json.push_back(qj);
    qcsv.row({cell.event_id, cell.model_id, row.report.prompt_id, row.report.ordering,
              std::to_string(cell.params.seed), format_number(q.rouge1.precision),
              format_number(q.rouge1.recall), format_number(q.rouge1.f1),
              format_number(q.rouge2.precision), format_number(q.rouge2.recall),
              format_number(q.rouge2.f1), format_number(q.rougeL.precision),
              format_number(q.rougeL.recall), format_number(q.rougeL.f1), degenerate ? "true" : "false",
              std::to_string(q.input_words), std::to_string(q.summary_words),
              std::string(quality::bucket_name(q.bucket)), "", ""});
  }

  CsvWriter fcsv(out_file(c, "fairness_report.csv"), report_header());
  for (const auto& r : fairness) fcsv.row(report_fields(r));
  write_jsonl(out_file(c, "fairness_report.jsonl"), fairness_json);
  write_jsonl(out_file(c, "quality_report.jsonl"), quality_json);
  write_jsonl(out_file(c, "gap_report.jsonl"), gaps);
  write_jsonl(out_file(c, "errors.jsonl"), errors);

  log << "evaluate: " << fairness.size() << " rows, " << gaps.size() << " entity gaps, "
      << errors.size() << " errors\n";
  return errors.empty() ? kExitOk : kExitPartial;
}

void normalise_score_csv(const fs::path& input, const fs::path& output_csv, const fs::path& spec_json) {
  std::ifstream in(input);
  if (!in) throw ValidationError("missing input " + input.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(input.string() + " is empty");
  const auto header = split_csv_line(line);
  if (header.size() < 2) throw ValidationError(input.string() + " needs a label column and metric columns");
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (!metrics::parse_metric(header[i])) throw ValidationError("unknown metric column '" + header[i] + "'");
  }

  metrics::ScoreTable table;
  std::vector<std::string> labels;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) throw ValidationError("ragged row in " + input.string());
    labels.push_back(fields[0]);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (fields[i].empty()) continue;
      double v = 0.0;
      const auto res = std::from_chars(fields[i].data(), fields[i].data() + fields[i].size(), v);
      if (res.ec != std::errc() || res.ptr != fields[i].data() + fields[i].size()) {
        throw ValidationError("non-numeric value '" + fields[i] + "' in " + input.string());
      }
      table[{fields[0], header[i]}] = v;
    }
  }

  const auto spec = metrics::build_normalisation_spec(table);
  const auto norm = metrics::normalise_scores(table, spec);
  CsvWriter out(output_csv, header);
  for (const auto& label : labels) {
    std::vector<std::string> fields = {label};
    for (std::size_t i = 1; i < header.size(); ++i) {
      const auto it = norm.find({label, header[i]});
      fields.push_back(it == norm.end() ? "" : format_number(it->second));
    }
    out.row(fields);
  }
  auto sj = open_out(spec_json);
  sj << spec.to_json() << '\n';
}

int cmd_normalise(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  ensure_out_dir(c);
  const fs::path out_csv = out_file(c, "normalised.csv");
  const fs::path out_spec = out_file(c, "normalisation_spec.json");
  if (o.input.extension() == ".csv") {
    normalise_score_csv(o.input, out_csv, out_spec);
    log << "normalise: wrote " << out_csv.string() << '\n';
    return kExitOk;
  }

  const auto rows = load_reports(c, o);
  // Rows of the score table: per (prompt, model, ordering) means plus an "all" ordering per (prompt, model).
  using Label = std::tuple<std::string, std::string, std::string>;
  std::map<Label, std::map<std::string, std::vector<double>>> groups;
  for (const auto& r : rows) {
    for (auto m : metrics::kAllMetrics) {
      const auto v = r.report.value(m);
      if (!v) continue;
      const std::string name(metrics::metric_name(m));
      groups[{r.report.prompt_id, r.report.model_id, r.report.ordering}][name].push_back(*v);
      groups[{r.report.prompt_id, r.report.model_id, "all"}][name].push_back(*v);
    }
  }
  metrics::ScoreTable table;
  std::map<std::string, Label> label_of;
  for (const auto& [label, cols] : groups) {
    const std::string key = std::get<0>(label) + '\x1f' + std::get<1>(label) + '\x1f' + std::get<2>(label);
    label_of[key] = label;
    for (const auto& [metric, values] : cols) table[{key, metric}] = mean(values);
  }
  if (table.empty()) throw ValidationError("no report rows to normalise");

  const auto spec = metrics::build_normalisation_spec(table);
  const auto norm = metrics::normalise_scores(table, spec);
  std::vector<std::string> header = {"prompt_id", "model_id", "ordering"};
  for (auto m : metrics::kAllMetrics) header.emplace_back(metrics::metric_name(m));
  CsvWriter out(out_csv, header);
  for (const auto& [key, label] : label_of) {
    std::vector<std::string> fields = {std::get<0>(label), std::get<1>(label), std::get<2>(label)};
    for (auto m : metrics::kAllMetrics) {
      const auto it = norm.find({key, std::string(metrics::metric_name(m))});
      fields.push_back(it == norm.end() ? "" : format_number(it->second));
    }
    out.row(fields);
  }
  auto sj = open_out(out_spec);
  sj << spec.to_json() << '\n';
  log << "normalise: " << label_of.size() << " rows\n";
  return kExitOk;
}

int cmd_stats(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  ensure_out_dir(c);
  const auto rows = load_reports(c, o);
  if (rows.empty()) throw ValidationError("no report rows for stats");
  bool partial = false;

  std::set<std::string> prompts;
  for (const auto& r : rows) prompts.insert(r.report.prompt_id);

  CsvWriter tcsv(out_file(c, "ttests.csv"),
                 {"prompt_id", "model_id", "metric", "position", "n_position", "n_random",
                  "mean_position", "mean_random", "t", "df", "p", "cohens_d", "stars", "note"});
  for (const auto& prompt : prompts) {
    for (const auto& model : c.grid.models) {
      for (auto m : metrics::kAllMetrics) {
        std::map<std::string, std::vector<double>> by_ordering;
        for (const auto& r : rows) {
          if (r.report.prompt_id != prompt || r.report.model_id != model.id) continue;
          if (const auto v = r.report.value(m)) by_ordering[r.report.ordering].push_back(*v);
        }
        const auto& random = by_ordering["random"];
        for (const char* position : {"lead_left", "lead_center", "lead_right"}) {
          const auto& pos = by_ordering[position];
          if (pos.empty() && random.empty()) continue;
          std::vector<std::string> f = {prompt, model.id, std::string(metrics::metric_name(m)), position,
                                        std::to_string(pos.size()), std::to_string(random.size()),
                                        pos.empty() ? "" : format_number(mean(pos)),
                                        random.empty() ? "" : format_number(mean(random))};
          if (pos.size() < 2 || random.size() < 2) {
            f.insert(f.end(), {"", "", "", "", "", "insufficient data"});
            partial = true;
          } else {
            try {
              const auto t = stats::welch_t({position, pos}, {"random", random});
              f.insert(f.end(), {format_number(t.t), format_number(t.df), format_number(t.p),
                                 format_number(t.d), std::string(stats::significance_stars(t.p)), ""});
            } catch (const ValidationError& e) {
              f.insert(f.end(), {"", "", "", "", "", e.what()});
              partial = true;
            }
          }
          tcsv.row(f);
        }
      }
    }
  }

  CsvWriter acsv(out_file(c, "anova.csv"),
                 {"prompt_id", "metric", "effect", "ss", "df", "f", "eta_sq", "p", "stars", "note"});
  for (const auto& prompt : prompts) {
    // The design is judged on the report rows themselves; a metric whose null values
    // unbalance an otherwise complete design is skipped rather than failing the command.
    std::vector<stats::Observation> design;
    for (const auto& r : rows) {
      if (r.report.prompt_id != prompt) continue;
      const auto& model = c.model(r.report.model_id);
      design.push_back({model.family, size_level(model), r.report.ordering, 0.0});
    }
    {
      std::map<std::tuple<std::string, std::string, std::string>, std::size_t> cells;
      std::set<std::string> fam, siz, pos;
      for (const auto& ob : design) {
        ++cells[{ob.family, ob.size, ob.position}];
        fam.insert(ob.family);
        siz.insert(ob.size);
        pos.insert(ob.position);
      }
      const std::size_t expected = fam.size() * siz.size() * pos.size();
      std::set<std::size_t> counts;
      for (const auto& [k, n] : cells) counts.insert(n);
      if (cells.size() != expected || counts.size() != 1) {
        throw ValidationError("incomplete design for prompt " + prompt + ": " + std::to_string(cells.size()) +
                              " of " + std::to_string(expected) +
                              " family x size x position cells filled with equal counts");
      }
    }

    for (auto m : metrics::kAllMetrics) {
      const std::string metric(metrics::metric_name(m));
      std::vector<stats::Observation> obs;
      for (const auto& r : rows) {
        if (r.report.prompt_id != prompt) continue;
        const auto v = r.report.value(m);
        if (!v) continue;
        const auto& model = c.model(r.report.model_id);
        obs.push_back({model.family, size_level(model), r.report.ordering, *v});
      }
      try {
        const auto table = stats::anova3(obs);
        for (const auto& row : table.rows) {
          acsv.row({prompt, metric, row.effect, format_number(row.ss), format_number(row.df),
                    row.f_infinite ? "inf" : format_number(row.f), format_number(row.eta_sq),
                    format_number(row.p), std::string(stats::significance_stars(row.p)), ""});
        }
        acsv.row({prompt, metric, "Residual", format_number(table.ss_error), format_number(table.df_error), "",
                  "", "", "", ""});
      } catch (const ValidationError& e) {
        acsv.row({prompt, metric, "", "", "", "", "", "", "", e.what()});
        partial = true;
      }
    }
  }
  log << "stats: " << rows.size() << " report rows" << (partial ? " (some tests skipped)" : "") << '\n';
  return partial ? kExitPartial : kExitOk;
}

int cmd_tournament(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  ensure_out_dir(c);
  const auto in = load_evaluation_inputs(c, o);
  const auto judge = make_generator(c, o, c.endpoints.judge.empty() ? c.endpoints.generation : c.endpoints.judge,
                                    c.endpoints.max_retries, "judge");
  const std::uint64_t seed = base_seed(c, o);

  // Candidates compete within a model family on the same (event, prompt, ordering, seed).
  using Group = std::tuple<std::string, std::string, std::string, std::string, std::uint64_t>;
  std::map<Group, std::vector<harness::Candidate>> groups;
  std::vector<Group> order;
  for (const auto& cell : in.cells) {
    const auto run = in.runs.find(harness::run_key(cell));
    if (run == in.runs.end() || !run->second.ok) continue;
    const Group g{cell.event_id, c.model(cell.model_id).family, std::string(harness::template_name(cell.template_id)),
                  std::string(corpus::Ordering::kind_name(cell.ordering)), cell.params.seed};
    auto [it, inserted] = groups.try_emplace(g);
    if (inserted) order.push_back(g);
    it->second.push_back({cell.model_id, run->second.summary});
  }

  harness::TournamentOptions topt;
  topt.both_orders = c.tournament.both_orders;
  topt.max_parallel = c.tournament.max_parallel;
  topt.params = c.grid.params;

  std::vector<json> results;
  std::vector<json> verdicts;
  std::size_t failed = 0;
  for (const auto& g : order) {
    const auto& cands = groups[g];
    if (cands.size() < 2) continue;
    const auto& [event_id, family, prompt, ordering, run_seed] = g;
    json ident{{"event_id", event_id}, {"family", family}, {"prompt_id", prompt}, {"ordering", ordering},
               {"seed", run_seed}};
    const std::uint64_t tseed =
        derive_seed(seed, {text::fnv1a64(event_id + '\x1f' + family + '\x1f' + prompt + '\x1f' + ordering), run_seed});
    try {
      const auto source = harness::event_source_text(*in.event_by_id.at(event_id), in.corpus.store);
      const auto result = harness::tournament(cands, source, *judge, tseed, topt);
      json r = ident;
      r["winner"] = result.winner ? json(*result.winner) : json(nullptr);
      r["vote_counts"] = result.vote_counts;
      r["discarded"] = result.discarded;
      results.push_back(std::move(r));
      for (const auto& pj : result.judgements) {
        json v = ident;
        v["pair"] = {pj.x_id, pj.y_id};
        v["pair_seed"] = pj.seed;
        v["presented_order"] = harness::order_name(pj.verdict.presented_order);
        v["slot_verdict"] = harness::slot_name(pj.verdict.slot);
        v["preferred"] = pj.verdict.preferred == harness::Preference::kX   ? json(pj.x_id)
                         : pj.verdict.preferred == harness::Preference::kY ? json(pj.y_id)
                                                                            : json(nullptr);
        v["verdict"] = harness::preference_name(pj.verdict.preferred);
        v["raw_response"] = pj.verdict.raw_response;
        verdicts.push_back(std::move(v));
      }
    } catch (const Error& e) {
      ++failed;
      json r = ident;
      r["error"] = e.what();
      results.push_back(std::move(r));
    }
  }
  write_jsonl(out_file(c, "tournament.jsonl"), results);
  write_jsonl(out_file(c, "verdicts.jsonl"), verdicts);
  log << "tournament: " << results.size() << " groups, " << verdicts.size() << " judgements, " << failed
      << " failed\n";
  return failed > 0 ? kExitPartial : kExitOk;
}

int cmd_report(const RunConfig& c, const CommandOptions& o, std::ostream& log) {
  ensure_out_dir(c);
  const auto rows = load_reports(c, o);

  using Key = std::tuple<std::string, std::string, std::string>;
  std::map<Key, std::map<std::string, std::vector<double>>> groups;
  std::map<Key, std::size_t> counts;
  for (const auto& r : rows) {
    const Key k{r.report.prompt_id, r.report.model_id, r.report.ordering};
    ++counts[k];
    for (auto m : metrics::kAllMetrics) {
      if (const auto v = r.report.value(m)) groups[k][std::string(metrics::metric_name(m))].push_back(*v);
    }
  }
  const fs::path qfile = out_file(c, "quality_report.jsonl");
  if (fs::exists(qfile)) {
    for (const auto& q : read_jsonl(qfile)) {
      const Key k{q.at("prompt_id").get<std::string>(), q.at("model_id").get<std::string>(),
                  q.at("ordering").get<std::string>()};
      for (const char* name : {"rouge1_f", "rouge2_f", "rougeL_f"}) groups[k][name].push_back(q.at(name).get<double>());
    }
  }
  std::map<Key, int> wins;
  const fs::path tfile = out_file(c, "tournament.jsonl");
  if (fs::exists(tfile)) {
    for (const auto& t : read_jsonl(tfile)) {
      if (!t.contains("winner") || t["winner"].is_null()) continue;
      ++wins[{t.at("prompt_id").get<std::string>(), t["winner"].get<std::string>(), t.at("ordering").get<std::string>()}];
    }
  }

  std::vector<std::string> header = {"prompt_id", "model_id", "ordering", "n"};
  std::vector<std::string> cols;
  for (auto m : metrics::kAllMetrics) cols.emplace_back(metrics::metric_name(m));
  cols.insert(cols.end(), {"rouge1_f", "rouge2_f", "rougeL_f"});
  header.insert(header.end(), cols.begin(), cols.end());
  header.push_back("tournament_wins");
  CsvWriter out(out_file(c, "report.csv"), header);
  for (const auto& [k, n] : counts) {
    std::vector<std::string> f = {std::get<0>(k), std::get<1>(k), std::get<2>(k), std::to_string(n)};
    for (const auto& col : cols) {
      const auto it = groups[k].find(col);
      f.push_back(it == groups[k].end() || it->second.empty() ? "" : format_number(mean(it->second)));
    }
    f.push_back(std::to_string(wins[k]));
    out.row(f);
  }
  log << "report: " << counts.size() << " rows\n";
  return kExitOk;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> kNames = {"build-corpus", "summarise", "annotate", "evaluate",
                                                  "normalise",    "stats",     "tournament", "report"};
  return kNames;
}

int run_command(std::string_view name, const CommandOptions& options, std::ostream& log) {
  try {
    if (options.config.empty()) throw ValidationError("--config is required");
    const RunConfig config = load_config(options.config);
    if (name == "build-corpus") return cmd_build_corpus(config, log);
    if (name == "summarise") return cmd_summarise(config, options, log);
    if (name == "annotate") return cmd_annotate(config, options, log);
    if (name == "evaluate") return cmd_evaluate(config, options, log);
    if (name == "normalise") return cmd_normalise(config, options, log);
    if (name == "stats") return cmd_stats(config, options, log);
    if (name == "tournament") return cmd_tournament(config, options, log);
    if (name == "report") return cmd_report(config, options, log);
    throw ValidationError("unknown command '" + std::string(name) + "'");
  } catch (const ValidationError& e) {
    log << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const InvalidArgument& e) {
    log << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitPartial;
  }
}

}  // namespace fairsumm::app
