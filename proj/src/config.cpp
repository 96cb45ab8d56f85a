#include <cstdlib>
#include <fstream>
#include <set>

#include "fairsumm/app.hpp"
#include "fairsumm/error.hpp"

namespace fairsumm::app {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) throw ValidationError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + "." + key + " has the wrong type");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

void parse_paths(const json& j, const fs::path& base, PathsConfig& out) {
  check_keys(j, {"articles", "out_dir", "cache", "annotator_fixture"}, "paths");
  out.articles = resolve(base, get_or<std::string>(j, "articles", "", "paths"));
  out.out_dir = resolve(base, get_or<std::string>(j, "out_dir", "out", "paths"));
  out.cache = resolve(base, get_or<std::string>(j, "cache", "", "paths"));
  out.annotator_fixture = resolve(base, get_or<std::string>(j, "annotator_fixture", "", "paths"));
  if (out.articles.empty()) throw ValidationError("paths.articles is required");
  if (!fs::exists(out.articles)) throw ValidationError("articles file not found: " + out.articles.string());
  if (out.cache.empty()) out.cache = out.out_dir / "annotations.jsonl";
}

void parse_endpoints(const json& j, EndpointsConfig& out) {
  check_keys(j,
             {"generation", "judge", "annotator", "timeout_ms", "max_retries", "max_parallel",
              "bearer_token", "annotator_model_version"},
             "endpoints");
  out.generation = get_or<std::string>(j, "generation", out.generation, "endpoints");
  out.judge = get_or<std::string>(j, "judge", out.judge, "endpoints");
  out.annotator = get_or<std::string>(j, "annotator", out.annotator, "endpoints");
  out.timeout_ms = get_or<int>(j, "timeout_ms", out.timeout_ms, "endpoints");
  out.max_retries = get_or<int>(j, "max_retries", out.max_retries, "endpoints");
  out.max_parallel = get_or<int>(j, "max_parallel", out.max_parallel, "endpoints");
  out.bearer_token = get_or<std::string>(j, "bearer_token", out.bearer_token, "endpoints");
  out.annotator_model_version =
      get_or<std::string>(j, "annotator_model_version", out.annotator_model_version, "endpoints");
  if (out.timeout_ms <= 0) throw ValidationError("endpoints.timeout_ms must be positive");
  if (out.max_retries < 0) throw ValidationError("endpoints.max_retries must be non-negative");
  if (out.max_parallel <= 0) throw ValidationError("endpoints.max_parallel must be positive");
}

void parse_corpus(const json& j, corpus::CorpusConfig& out) {
  check_keys(j,
             {"time_window_days", "similarity_threshold", "max_event_words", "excluded_sections",
              "min_articles"},
             "corpus");
  out.time_window_days = get_or<int>(j, "time_window_days", out.time_window_days, "corpus");
  out.similarity_threshold = get_or<double>(j, "similarity_threshold", out.similarity_threshold, "corpus");
  out.max_event_words = get_or<std::size_t>(j, "max_event_words", out.max_event_words, "corpus");
  out.min_articles = get_or<std::size_t>(j, "min_articles", out.min_articles, "corpus");
  if (j.contains("excluded_sections")) {
    const auto v = get_or<std::vector<std::string>>(j, "excluded_sections", {}, "corpus");
    out.excluded_sections = std::set<std::string>(v.begin(), v.end());
  }
  out.validate();
}

harness::ModelSpec parse_model(const json& j) {
  check_keys(j, {"id", "family", "size", "size_class", "endpoint"}, "grid.models[]");
  harness::ModelSpec m;
  m.id = get_or<std::string>(j, "id", "", "grid.models[]");
  m.family = get_or<std::string>(j, "family", "", "grid.models[]");
  m.size = get_or<double>(j, "size", 0.0, "grid.models[]");
  m.size_class = get_or<std::string>(j, "size_class", "", "grid.models[]");
  m.endpoint = get_or<std::string>(j, "endpoint", "", "grid.models[]");
  if (m.id.empty()) throw ValidationError("grid.models[] entry without id");
  if (m.family.empty()) throw ValidationError("model " + m.id + " has no family");
  if (!(m.size > 0.0)) throw ValidationError("model " + m.id + " needs a positive size");
  return m;
}

void parse_grid(const json& j, harness::GridSpec& out) {
  check_keys(j, {"models", "templates", "orderings", "seeds", "max_parallel", "max_retries"}, "grid");
  if (j.contains("models")) {
    if (!j["models"].is_array()) throw ValidationError("grid.models must be an array");
    std::set<std::string> ids;
    for (const auto& m : j["models"]) {
      out.models.push_back(parse_model(m));
      if (!ids.insert(out.models.back().id).second) {
        throw ValidationError("duplicate model id " + out.models.back().id);
      }
    }
  }
  for (const auto& name : get_or<std::vector<std::string>>(j, "templates", {"baseline"}, "grid")) {
    const auto t = harness::parse_template(name);
    if (!t) throw ValidationError("unknown template '" + name + "'");
    out.templates.push_back(*t);
  }
  for (const auto& name :
       get_or<std::vector<std::string>>(j, "orderings", {"random", "lead_left", "lead_center", "lead_right"},
                                        "grid")) {
    const auto o = corpus::Ordering::parse_kind(name);
    if (!o) throw ValidationError("unknown ordering '" + name + "'");
    out.orderings.push_back(*o);
  }
  out.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", {0}, "grid");
  out.max_parallel = get_or<std::size_t>(j, "max_parallel", out.max_parallel, "grid");
  out.max_retries = get_or<int>(j, "max_retries", out.max_retries, "grid");
  if (out.seeds.empty()) throw ValidationError("grid.seeds is empty");
  if (out.max_parallel == 0) throw ValidationError("grid.max_parallel must be positive");
  if (out.max_retries < 0) throw ValidationError("grid.max_retries must be non-negative");
}

void parse_metrics(const json& j, pipeline::MetricOptions& out) {
  check_keys(j, {"top_k_entities", "input_proportion"}, "metrics");
  out.top_k_entities = get_or<std::size_t>(j, "top_k_entities", out.top_k_entities, "metrics");
  if (out.top_k_entities == 0) throw ValidationError("metrics.top_k_entities must be positive");
  const auto basis = get_or<std::string>(j, "input_proportion", "article_count", "metrics");
  if (basis == "article_count") {
    out.input_proportion = corpus::InputProportion::kArticleCount;
  } else if (basis == "word_count") {
    out.input_proportion = corpus::InputProportion::kWordCount;
  } else {
    throw ValidationError("metrics.input_proportion must be article_count or word_count");
  }
}

void parse_stubs(const json& j, StubConfig& out) {
  check_keys(j, {"annotator", "sentiment", "political", "document_confidence", "entity_type", "generator"},
             "stubs");
  out.annotator = get_or<std::string>(j, "annotator", out.annotator, "stubs");
  if (out.annotator != "constant" && out.annotator != "hash" && out.annotator != "replay") {
    throw ValidationError("stubs.annotator must be constant, hash or replay");
  }
  const auto s = parse_sentiment(get_or<std::string>(j, "sentiment", "neutral", "stubs"));
  if (!s) throw ValidationError("stubs.sentiment is not a sentiment label");
  out.sentiment = *s;
  const auto p = parse_leaning(get_or<std::string>(j, "political", "center", "stubs"));
  if (!p) throw ValidationError("stubs.political is not a leaning label");
  out.political = *p;
  out.document_confidence =
      get_or<std::array<double, 3>>(j, "document_confidence", out.document_confidence, "stubs");
  out.entity_type = get_or<std::string>(j, "entity_type", out.entity_type, "stubs");
  out.generator = get_or<std::string>(j, "generator", out.generator, "stubs");
  if (out.generator != "extractive" && out.generator != "echo" && out.generator != "fail") {
    throw ValidationError("stubs.generator must be extractive, echo or fail");
  }
}

}  // namespace

const harness::ModelSpec& RunConfig::model(std::string_view id) const {
  for (const auto& m : grid.models) {
    if (m.id == id) return m;
  }
  throw ValidationError("model '" + std::string(id) + "' is not in grid.models");
}

RunConfig parse_config(const json& doc, const fs::path& base_dir) {
  check_keys(doc,
             {"seed", "paths", "endpoints", "corpus", "grid", "generation", "metrics", "tournament",
              "stubs"},
             "config");
  RunConfig c;
  c.seed = get_or<std::uint64_t>(doc, "seed", 0, "config");
  if (!doc.contains("paths")) throw ValidationError("config.paths is required");
  parse_paths(doc["paths"], base_dir, c.paths);
  parse_endpoints(doc.value("endpoints", json::object()), c.endpoints);
  parse_corpus(doc.value("corpus", json::object()), c.corpus);
  parse_grid(doc.value("grid", json::object()), c.grid);
  c.grid.params = harness::GenerationParams::from_json(doc.value("generation", json::object()));
  parse_metrics(doc.value("metrics", json::object()), c.metrics);
  const json t = doc.value("tournament", json::object());
  check_keys(t, {"both_orders", "max_parallel"}, "tournament");
  c.tournament.both_orders = get_or<bool>(t, "both_orders", false, "tournament");
  c.tournament.max_parallel = get_or<std::size_t>(t, "max_parallel", 1, "tournament");
  if (c.tournament.max_parallel == 0) throw ValidationError("tournament.max_parallel must be positive");
  parse_stubs(doc.value("stubs", json::object()), c.stubs);
  if (c.stubs.annotator == "replay") {
    if (c.paths.annotator_fixture.empty() || !fs::exists(c.paths.annotator_fixture)) {
      throw ValidationError("stubs.annotator = replay needs an existing paths.annotator_fixture");
    }
  }
  return c;
}

RunConfig load_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open config " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config " + file.string() + " is not valid JSON: " + e.what());
  }
  RunConfig c = parse_config(doc, fs::absolute(file).parent_path());
  apply_env_overrides(c);
  return c;
}

void apply_env_overrides(RunConfig& config) {
  auto take = [](const char* name, std::string& target) {
    if (const char* v = std::getenv(name); v != nullptr && *v != '\0') target = v;
  };
  take("FAIRSUMM_GENERATION_URL", config.endpoints.generation);
  take("FAIRSUMM_JUDGE_URL", config.endpoints.judge);
  take("FAIRSUMM_ANNOTATOR_URL", config.endpoints.annotator);
}

}  // namespace fairsumm::app
