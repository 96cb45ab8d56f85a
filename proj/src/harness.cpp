#include "fairsumm/harness.hpp"

#include <chrono>
#include <fstream>
#include <future>
#include <set>

#include "fairsumm/error.hpp"
#include "fairsumm/rng.hpp"
#include "fairsumm/sentences.hpp"
#include "fairsumm/text.hpp"

namespace fairsumm::harness {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Generation parameters and client

void GenerationParams::validate() const {
  if (max_new_tokens <= 0 || min_new_tokens <= 0) throw ValidationError("token limits must be positive");
  if (min_new_tokens > max_new_tokens) throw ValidationError("min_new_tokens exceeds max_new_tokens");
  if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");
  if (!(top_p > 0.0) || top_p > 1.0) throw ValidationError("top_p must lie in (0, 1]");
  if (!(repetition_penalty > 0.0)) throw ValidationError("repetition_penalty must be positive");
  if (no_repeat_ngram <= 0) throw ValidationError("no_repeat_ngram must be positive");
}

json GenerationParams::to_json() const {
  return json{{"max_new_tokens", max_new_tokens},
              {"min_new_tokens", min_new_tokens},
              {"temperature", temperature},
              {"top_p", top_p},
              {"repetition_penalty", repetition_penalty},
              {"no_repeat_ngram", no_repeat_ngram},
              {"seed", seed}};
}

GenerationParams GenerationParams::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("generation params must be an object");
  static const std::set<std::string> kKeys = {"max_new_tokens", "min_new_tokens", "temperature",
                                              "top_p", "repetition_penalty", "no_repeat_ngram",
                                              "seed"};
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) throw ValidationError("unknown generation key: " + key);
  }
  GenerationParams p;
  try {
    p.max_new_tokens = j.value("max_new_tokens", p.max_new_tokens);
    p.min_new_tokens = j.value("min_new_tokens", p.min_new_tokens);
    p.temperature = j.value("temperature", p.temperature);
    p.top_p = j.value("top_p", p.top_p);
    p.repetition_penalty = j.value("repetition_penalty", p.repetition_penalty);
    p.no_repeat_ngram = j.value("no_repeat_ngram", p.no_repeat_ngram);
    p.seed = j.value("seed", p.seed);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("generation params: ") + e.what());
  }
  p.validate();
  return p;
}

GenerationClient::GenerationClient(std::shared_ptr<Transport> transport, int max_retries)
    : transport_(std::move(transport)), max_retries_(max_retries) {
  if (!transport_) throw InvalidArgument("GenerationClient needs a transport");
  if (max_retries_ < 0) throw InvalidArgument("max_retries must be non-negative");
}

std::string GenerationClient::generate(const std::string& prompt, const GenerationParams& params) {
  const json body{{"prompt", prompt}, {"params", params.to_json()}};
  for (int attempt = 0;; ++attempt) {
    ++attempts_;
    try {
      const json response = transport_->post("/v1/generate", body);
      if (!response.is_object() || !response.contains("text") || !response["text"].is_string()) {
        throw ProtocolViolation("/v1/generate response lacks a string 'text'");
      }
      return response["text"].get<std::string>();
    } catch (const TransportError&) {
      if (attempt >= max_retries_) throw;
    }
  }
}

// ---------------------------------------------------------------------------
// Prompt parsing used by the stub endpoint and scripted judges

std::optional<JudgePromptParts> parse_judge_prompt(std::string_view prompt) {
  constexpr std::string_view kSource = "[Source Document]\n";
  constexpr std::string_view kStartA = "\n\n[The Start of Summary A]\n";
  constexpr std::string_view kEndA = "\n[The End of Summary A]";
  constexpr std::string_view kStartB = "\n\n[The Start of Summary B]\n";
  constexpr std::string_view kEndB = "\n[The End of Summary B]";

  if (!prompt.ends_with(kEndB)) return std::nullopt;
  const std::size_t end_b = prompt.size() - kEndB.size();
  const std::size_t start_b = prompt.rfind(kStartB, end_b);
  if (start_b == std::string_view::npos) return std::nullopt;
  const std::size_t end_a = prompt.rfind(kEndA, start_b);
  if (end_a == std::string_view::npos) return std::nullopt;
  const std::size_t start_a = prompt.rfind(kStartA, end_a);
  if (start_a == std::string_view::npos) return std::nullopt;
  const std::size_t source = prompt.rfind(kSource, start_a);
  if (source == std::string_view::npos) return std::nullopt;

  JudgePromptParts parts;
  parts.source = std::string(prompt.substr(source + kSource.size(), start_a - source - kSource.size()));
  parts.summary_a = std::string(prompt.substr(start_a + kStartA.size(), end_a - start_a - kStartA.size()));
  parts.summary_b = std::string(prompt.substr(start_b + kStartB.size(), end_b - start_b - kStartB.size()));
  return parts;
}

std::vector<std::string> extract_prompt_documents(std::string_view prompt) {
  std::vector<std::string> docs;

  constexpr std::string_view kArticle = "Article text: ";
  constexpr std::string_view kBlockSep = " }\n{Publisher: ";
  constexpr std::string_view kBlockEnd = " }\n\nSummary:";
  if (prompt.find("{Publisher: ") != std::string_view::npos) {
    const std::size_t last = prompt.rfind(kBlockEnd);
    std::size_t pos = prompt.find(kArticle);
    while (pos != std::string_view::npos && last != std::string_view::npos && pos < last) {
      const std::size_t body = pos + kArticle.size();
      std::size_t stop = prompt.find(kBlockSep, body);
      if (stop == std::string_view::npos || stop > last) stop = last;
      docs.emplace_back(prompt.substr(body, stop - body));
      pos = prompt.find(kArticle, stop);
    }
    return docs;
  }

  const std::size_t summary = prompt.rfind("\nSummary:");
  if (summary == std::string_view::npos) return docs;
  std::size_t pos = prompt.find("Document 1:\n");
  for (int k = 1; pos != std::string_view::npos && pos < summary; ++k) {
    const std::string header = "Document " + std::to_string(k) + ":\n";
    const std::string next = "\n\nDocument " + std::to_string(k + 1) + ":\n";
    const std::size_t body = pos + header.size();
    std::size_t stop = prompt.find(next, body);
    if (stop == std::string_view::npos || stop > summary) {
      docs.emplace_back(prompt.substr(body, summary - body));
      break;
    }
    docs.emplace_back(prompt.substr(body, stop - body));
    pos = stop + 2;
  }
  return docs;
}

// ---------------------------------------------------------------------------
// Stub generation endpoint

StubGeneratorTransport::StubGeneratorTransport(Options options) : options_(std::move(options)) {}

std::string StubGeneratorTransport::respond(std::string_view prompt, std::uint64_t seed) const {
  if (options_.mode == Mode::kFail) throw TransportError("stub generator configured to fail");

  if (const auto judge = parse_judge_prompt(prompt)) {
    const std::size_t a = judge->summary_a.size();
    const std::size_t b = judge->summary_b.size();
    const char* verdict = a < b ? "[[A]]" : (b < a ? "[[B]]" : "[[C]]");
    return std::string("The more concise summary is preferred. ") + verdict;
  }

  if (options_.mode == Mode::kExtractive) {
    const auto docs = extract_prompt_documents(prompt);
    if (!docs.empty()) {
      std::string out;
      for (std::size_t i = 0; i < docs.size(); ++i) {
        const auto sentences = split_sentences(docs[i]);
        const std::size_t take = 1 + (derive_seed(seed, {text::fnv1a64(options_.salt), i}) & 1);
        for (std::size_t s = 0; s < sentences.size() && s < take; ++s) {
          if (!out.empty()) out += ' ';
          out += sentences[s].text;
        }
      }
      return out;
    }
  }

  const std::size_t n = std::min(options_.echo_chars, prompt.size());
  return std::string(prompt.substr(prompt.size() - n));
}

json StubGeneratorTransport::post(const std::string& path, const json& body) {
  if (path != "/v1/generate") throw ProtocolViolation("HTTP 404: unknown path " + path);
  if (!body.is_object() || !body.contains("prompt") || !body["prompt"].is_string()) {
    throw ProtocolViolation("HTTP 422: request body must carry a string 'prompt'");
  }
  std::uint64_t seed = 0;
  if (body.contains("params") && body["params"].is_object()) {
    seed = body["params"].value("seed", std::uint64_t{0});
  }
  return json{{"text", respond(body["prompt"].get<std::string>(), seed)}};
}

json StubGeneratorTransport::get(const std::string& path) {
  if (path == "/healthz") return json{{"status", "ok"}};
  throw ProtocolViolation("HTTP 404: unknown path " + path);
}

// ---------------------------------------------------------------------------
// Judge

Slot parse_verdict(std::string_view response) noexcept {
  std::size_t best = std::string_view::npos;
  Slot slot = Slot::kInvalid;
  constexpr std::array<std::pair<std::string_view, Slot>, 3> kTokens = {
      {{"[[A]]", Slot::kA}, {"[[B]]", Slot::kB}, {"[[C]]", Slot::kTie}}};
  for (const auto& [token, s] : kTokens) {
    const std::size_t pos = response.rfind(token);
    if (pos != std::string_view::npos && (best == std::string_view::npos || pos > best)) {
      best = pos;
      slot = s;
    }
  }
  return slot;
}

std::string_view slot_name(Slot s) noexcept {
  switch (s) {
    case Slot::kA:
      return "A";
    case Slot::kB:
      return "B";
    case Slot::kTie:
      return "Tie";
    case Slot::kInvalid:
      return "Invalid";
  }
  return "";
}

std::string_view order_name(PresentedOrder o) noexcept { return o == PresentedOrder::kAB ? "AB" : "BA"; }

std::string_view preference_name(Preference p) noexcept {
  switch (p) {
    case Preference::kX:
      return "x";
    case Preference::kY:
      return "y";
    case Preference::kTie:
      return "tie";
    case Preference::kInvalid:
      return "invalid";
  }
  return "";
}

PresentedOrder presentation_order(std::uint64_t seed) noexcept {
  Rng rng(derive_seed(seed, {0x6a75646765ULL}));
  return rng.coin() ? PresentedOrder::kBA : PresentedOrder::kAB;
}

JudgeVerdict judge_in_order(TextGenerator& judge, std::string_view source, std::string_view x,
                            std::string_view y, PresentedOrder order, const GenerationParams& params) {
  if (x.empty() || y.empty()) throw InvalidArgument("pairwise_judge: empty summary");
  const bool x_first = order == PresentedOrder::kAB;
  const std::string prompt = render_judge_prompt(source, x_first ? x : y, x_first ? y : x);

  JudgeVerdict v;
  v.presented_order = order;
  v.raw_response = judge.generate(prompt, params);
  v.slot = parse_verdict(v.raw_response);
  switch (v.slot) {
    case Slot::kA:
      v.preferred = x_first ? Preference::kX : Preference::kY;
      break;
    case Slot::kB:
      v.preferred = x_first ? Preference::kY : Preference::kX;
      break;
    case Slot::kTie:
      v.preferred = Preference::kTie;
      break;
    case Slot::kInvalid:
      v.preferred = Preference::kInvalid;
      break;
  }
  return v;
}

JudgeVerdict pairwise_judge(TextGenerator& judge, std::string_view source, std::string_view x,
                            std::string_view y, std::uint64_t seed, const GenerationParams& params) {
  return judge_in_order(judge, source, x, y, presentation_order(seed), params);
}

TournamentResult tournament(std::span<const Candidate> candidates, std::string_view source,
                            TextGenerator& judge, std::uint64_t seed, const TournamentOptions& options) {
  if (candidates.size() < 2) throw InvalidArgument("tournament needs at least two summaries");
  std::set<std::string> ids;
  for (const auto& c : candidates) {
    if (!ids.insert(c.id).second) throw InvalidArgument("duplicate summary id: " + c.id);
  }

  struct Job {
    std::size_t i;
    std::size_t j;
    std::uint64_t seed;
    std::optional<PresentedOrder> forced;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (std::size_t j = i + 1; j < candidates.size(); ++j) {
      const std::uint64_t s = derive_seed(seed, {i, j});
      if (options.both_orders) {
        jobs.push_back({i, j, s, PresentedOrder::kAB});
        jobs.push_back({i, j, s, PresentedOrder::kBA});
      } else {
        jobs.push_back({i, j, s, std::nullopt});
      }
    }
  }

  auto run = [&](const Job& job) {
    const auto& x = candidates[job.i];
    const auto& y = candidates[job.j];
    JudgeVerdict v = job.forced
                         ? judge_in_order(judge, source, x.text, y.text, *job.forced, options.params)
                         : pairwise_judge(judge, source, x.text, y.text, job.seed, options.params);
    return PairJudgement{x.id, y.id, job.seed, std::move(v)};
  };

  TournamentResult result;
  result.judgements.reserve(jobs.size());
  const std::size_t width = std::max<std::size_t>(1, options.max_parallel);
  for (std::size_t begin = 0; begin < jobs.size(); begin += width) {
    const std::size_t end = std::min(jobs.size(), begin + width);
    if (width == 1) {
      result.judgements.push_back(run(jobs[begin]));
      continue;
    }
    std::vector<std::future<PairJudgement>> futures;
    for (std::size_t k = begin; k < end; ++k) {
      futures.push_back(std::async(std::launch::async, run, std::cref(jobs[k])));
    }
    for (auto& f : futures) result.judgements.push_back(f.get());
  }

  for (const auto& c : candidates) result.vote_counts[c.id] = 0;
  for (const auto& pj : result.judgements) {
    switch (pj.verdict.preferred) {
      case Preference::kX:
        ++result.vote_counts[pj.x_id];
        break;
      case Preference::kY:
        ++result.vote_counts[pj.y_id];
        break;
      default:
        ++result.discarded;
    }
  }

  int top = 0;
  std::size_t at_top = 0;
  for (const auto& [id, votes] : result.vote_counts) {
    if (votes > top) {
      top = votes;
      at_top = 1;
      result.winner = id;
    } else if (votes == top) {
      ++at_top;
    }
  }
  if (top == 0 || at_top != 1) result.winner.reset();
  return result;
}

// ---------------------------------------------------------------------------
// Grid

std::string run_key(const GridCell& cell) {
  const json canonical{{"event_id", cell.event_id},
                       {"model_id", cell.model_id},
                       {"template_id", template_name(cell.template_id)},
                       {"ordering", corpus::Ordering::kind_name(cell.ordering)},
                       {"params", cell.params.to_json()}};
  return text::sha256_hex(canonical.dump());
}

std::uint64_t ordering_seed(const GridCell& cell) noexcept {
  return derive_seed(cell.params.seed, {text::fnv1a64(cell.event_id)});
}

json RunRecord::to_json() const {
  json j{{"run_key", run_key},
         {"event_id", event_id},
         {"model_id", model_id},
         {"template_id", template_id},
         {"ordering", ordering},
         {"seed", seed},
         {"prompt_hash", prompt_hash},
         {"status", ok ? "ok" : "failed"},
         {"summary", summary},
         {"attempts", attempts},
         {"elapsed_ms", elapsed_ms}};
  if (!ok) j["error"] = error;
  return j;
}

RunRecord RunRecord::from_json(const json& j) {
  RunRecord r;
  r.run_key = j.at("run_key").get<std::string>();
  r.event_id = j.at("event_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.template_id = j.at("template_id").get<std::string>();
  r.ordering = j.at("ordering").get<std::string>();
  r.seed = j.value("seed", std::uint64_t{0});
  r.prompt_hash = j.value("prompt_hash", std::string());
  r.ok = j.value("status", std::string()) == "ok";
  r.summary = j.value("summary", std::string());
  r.error = j.value("error", std::string());
  r.attempts = j.value("attempts", 0);
  r.elapsed_ms = j.value("elapsed_ms", std::int64_t{0});
  return r;
}

std::vector<RunRecord> read_runs(const std::filesystem::path& file) {
  std::vector<RunRecord> out;
  std::ifstream in(file);
  if (!in) return out;
  std::map<std::string, std::size_t> index;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    RunRecord r;
    try {
      r = RunRecord::from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw ValidationError(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    auto [it, inserted] = index.try_emplace(r.run_key, out.size());
    if (inserted) {
      out.push_back(std::move(r));
    } else {
      out[it->second] = std::move(r);
    }
  }
  return out;
}

std::string cell_prompt(const GridCell& cell, const corpus::Event& event,
                        const corpus::ArticleStore& store) {
  const corpus::Ordering ordering{cell.ordering, ordering_seed(cell)};
  std::vector<PromptArticle> articles;
  for (const auto& id : corpus::order_articles(event, store, ordering)) {
    const auto& a = store.at(id);
    articles.push_back(PromptArticle{a.body, a.publisher, a.leaning});
  }
  return render_prompt(cell.template_id, articles);
}

std::string event_source_text(const corpus::Event& event, const corpus::ArticleStore& store) {
  std::string out;
  for (const auto& id : event.article_ids) {
    if (!out.empty()) out += "\n\n";
    out += store.at(id).body;
  }
  return out;
}

std::vector<GridCell> expand_grid(std::span<const corpus::Event> events, const GridSpec& spec) {
  std::vector<GridCell> cells;
  for (const auto& e : events) {
    for (const auto& m : spec.models) {
      for (TemplateId t : spec.templates) {
        for (auto o : spec.orderings) {
          for (std::uint64_t s : spec.seeds) {
            GridCell c{e.id, m.id, t, o, spec.params};
            c.params.seed = s;
            cells.push_back(std::move(c));
          }
        }
      }
    }
  }
  return cells;
}

namespace {

RunRecord execute_cell(const GridCell& cell, const corpus::Event& event,
                       const corpus::ArticleStore& store, TextGenerator& generator, int max_retries) {
  RunRecord r;
  r.run_key = run_key(cell);
  r.event_id = cell.event_id;
  r.model_id = cell.model_id;
  r.template_id = std::string(template_name(cell.template_id));
  r.ordering = std::string(corpus::Ordering::kind_name(cell.ordering));
  r.seed = cell.params.seed;

  const auto start = std::chrono::steady_clock::now();
  try {
    const std::string prompt = cell_prompt(cell, event, store);
    r.prompt_hash = text::sha256_hex(prompt);
    for (int attempt = 0;; ++attempt) {
      ++r.attempts;
      try {
        r.summary = generator.generate(prompt, cell.params);
        r.ok = true;
        break;
      } catch (const TransportError& e) {
        if (attempt >= max_retries) {
          r.error = e.what();
          break;
        }
      }
    }
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  if (r.ok && r.summary.find_first_not_of(" \t\r\n") == std::string::npos) {
    r.ok = false;
    r.error = "empty summary";
  }
  r.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  return r;
}

}  // namespace

GridOutcome run_grid(std::span<const corpus::Event> events, const corpus::ArticleStore& store,
                     const GridSpec& spec, const GeneratorFactory& generators,
                     const std::filesystem::path& runs_file, bool resume) {
  spec.params.validate();
  if (spec.max_parallel == 0) throw ValidationError("max_parallel must be positive");

  std::set<std::string> done;
  if (resume) {
    for (const auto& r : read_runs(runs_file)) {
      if (r.ok) done.insert(r.run_key);
    }
  }
  std::ofstream out(runs_file, resume ? std::ios::app : std::ios::trunc);
  if (!out) throw Error("cannot write " + runs_file.string());

  std::map<std::string, const corpus::Event*> by_id;
  for (const auto& e : events) by_id[e.id] = &e;
  std::map<std::string, std::shared_ptr<TextGenerator>> gens;
  for (const auto& m : spec.models) gens[m.id] = generators(m);

  GridOutcome outcome;
  std::vector<GridCell> pending;
  for (auto& cell : expand_grid(events, spec)) {
    if (done.contains(run_key(cell))) {
      ++outcome.skipped;
    } else {
      pending.push_back(std::move(cell));
    }
  }

  for (std::size_t begin = 0; begin < pending.size(); begin += spec.max_parallel) {
    const std::size_t end = std::min(pending.size(), begin + spec.max_parallel);
    std::vector<std::future<RunRecord>> futures;
    for (std::size_t k = begin; k < end; ++k) {
      const GridCell& cell = pending[k];
      futures.push_back(std::async(std::launch::async, [&, &cell = cell] {
        return execute_cell(cell, *by_id.at(cell.event_id), store, *gens.at(cell.model_id),
                            spec.max_retries);
      }));
    }
    for (auto& f : futures) {
      const RunRecord r = f.get();
      ++outcome.executed;
      if (!r.ok) ++outcome.failed;
      out << r.to_json().dump() << '\n';
    }
    out.flush();
  }
  return outcome;
}

}  // namespace fairsumm::harness
