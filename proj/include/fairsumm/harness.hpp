#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairsumm/corpus.hpp"
#include "fairsumm/prompts.hpp"
#include "fairsumm/transport.hpp"

namespace fairsumm::harness {

struct GenerationParams {
  int max_new_tokens = 512;
  int min_new_tokens = 100;
  double temperature = 0.7;
  double top_p = 0.95;
  double repetition_penalty = 1.1;
  int no_repeat_ngram = 3;
  std::uint64_t seed = 0;

  /// Throws ValidationError unless every field is positive and min <= max tokens.
  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static GenerationParams from_json(const nlohmann::json& j);
};

/// Anything that turns a prompt into text: a remote endpoint, a stub, a scripted judge.
class TextGenerator {
 public:
  virtual ~TextGenerator() = default;
  virtual std::string generate(const std::string& prompt, const GenerationParams& params) = 0;
};

/// POST /v1/generate {"prompt", "params"} -> {"text"}, retrying TransportError.
class GenerationClient final : public TextGenerator {
 public:
  GenerationClient(std::shared_ptr<Transport> transport, int max_retries = 2);

  std::string generate(const std::string& prompt, const GenerationParams& params) override;

  std::size_t attempts() const noexcept { return attempts_.load(); }

 private:
  std::shared_ptr<Transport> transport_;
  int max_retries_;
  std::atomic<std::size_t> attempts_{0};
};

/// Source documents and summaries recovered from a rendered judge prompt.
struct JudgePromptParts {
  std::string source;
  std::string summary_a;
  std::string summary_b;
};
std::optional<JudgePromptParts> parse_judge_prompt(std::string_view prompt);

/// Article bodies recovered from a rendered summarisation prompt, in prompt order.
std::vector<std::string> extract_prompt_documents(std::string_view prompt);

/// Deterministic offline generation endpoint.
///
/// kExtractive answers summarisation prompts with the leading sentence of every
/// document, plus a second sentence for documents picked by the seed. kEcho
/// returns the last echo_chars bytes of the prompt. Judge prompts are answered
/// with "[[A]]" when summary A is shorter, "[[B]]" when longer, "[[C]]" on a tie.
/// kFail raises TransportError on every call. `salt` is mixed into the seed so
/// stubs standing in for different models give different extracts.
class StubGeneratorTransport final : public Transport {
 public:
  enum class Mode { kExtractive, kEcho, kFail };
  struct Options {
    Mode mode = Mode::kExtractive;
    std::size_t echo_chars = 200;
    std::string salt;
  };

  explicit StubGeneratorTransport(Options options);
  StubGeneratorTransport() : StubGeneratorTransport(Options{}) {}

  nlohmann::json post(const std::string& path, const nlohmann::json& body) override;
  nlohmann::json get(const std::string& path) override;

  std::string respond(std::string_view prompt, std::uint64_t seed) const;

 private:
  Options options_;
};

// ---------------------------------------------------------------------------
// Judge and tournament

enum class Slot { kA, kB, kTie, kInvalid };

/// Final occurrence of "[[A]]", "[[B]]" or "[[C]]" in the response; otherwise kInvalid.
Slot parse_verdict(std::string_view response) noexcept;

/// AB: x was shown as Summary A. BA: x was shown as Summary B.
enum class PresentedOrder { kAB, kBA };

enum class Preference { kX, kY, kTie, kInvalid };

struct JudgeVerdict {
  Slot slot = Slot::kInvalid;
  Preference preferred = Preference::kInvalid;
  std::string raw_response;
  PresentedOrder presented_order = PresentedOrder::kAB;
};

std::string_view slot_name(Slot s) noexcept;
std::string_view order_name(PresentedOrder o) noexcept;
std::string_view preference_name(Preference p) noexcept;

/// Presentation order drawn from `seed` alone.
PresentedOrder presentation_order(std::uint64_t seed) noexcept;

/// Judges x against y with slots assigned by presentation_order(seed).
JudgeVerdict pairwise_judge(TextGenerator& judge, std::string_view source, std::string_view x,
                            std::string_view y, std::uint64_t seed,
                            const GenerationParams& params = {});

/// Same, with the presentation order fixed by the caller.
JudgeVerdict judge_in_order(TextGenerator& judge, std::string_view source, std::string_view x,
                            std::string_view y, PresentedOrder order,
                            const GenerationParams& params = {});

struct Candidate {
  std::string id;
  std::string text;
};

struct PairJudgement {
  std::string x_id;
  std::string y_id;
  std::uint64_t seed = 0;
  JudgeVerdict verdict;
};

struct TournamentOptions {
  /// Judge every pair in both presentation orders instead of one seeded order.
  bool both_orders = false;
  std::size_t max_parallel = 1;
  GenerationParams params;
};

struct TournamentResult {
  std::optional<std::string> winner;
  std::map<std::string, int> vote_counts;
  std::size_t discarded = 0;
  std::vector<PairJudgement> judgements;
};

/// Round robin over all unordered pairs (i < j). Pair (i, j) uses seed
/// derive_seed(seed, {i, j}). A preferred summary gains one vote; ties and invalid
/// verdicts are discarded. The winner needs a strict plurality of votes.
TournamentResult tournament(std::span<const Candidate> candidates, std::string_view source,
                            TextGenerator& judge, std::uint64_t seed,
                            const TournamentOptions& options = {});

// ---------------------------------------------------------------------------
// Summarisation grid

struct ModelSpec {
  std::string id;
  std::string family;
  double size = 0.0;
  /// Size level used by the factorial ANOVA; empty means the size itself.
  std::string size_class;
  /// Generation endpoint base URL; empty means the configured default.
  std::string endpoint;
};

struct GridCell {
  std::string event_id;
  std::string model_id;
  TemplateId template_id = TemplateId::kBaseline;
  corpus::Ordering::Kind ordering = corpus::Ordering::Kind::kRandom;
  GenerationParams params;
};

/// sha256 of the canonical JSON of the cell.
std::string run_key(const GridCell& cell);

/// Seed used to permute the articles of a cell.
std::uint64_t ordering_seed(const GridCell& cell) noexcept;

struct RunRecord {
  std::string run_key;
  std::string event_id;
  std::string model_id;
  std::string template_id;
  std::string ordering;
  std::uint64_t seed = 0;
  std::string prompt_hash;
  bool ok = false;
  std::string summary;
  std::string error;
  int attempts = 0;
  std::int64_t elapsed_ms = 0;

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

/// Reads runs.jsonl; later lines for the same run key replace earlier ones.
std::vector<RunRecord> read_runs(const std::filesystem::path& file);

/// The rendered prompt for a cell.
std::string cell_prompt(const GridCell& cell, const corpus::Event& event,
                        const corpus::ArticleStore& store);

/// Event member bodies in member order separated by blank lines.
std::string event_source_text(const corpus::Event& event, const corpus::ArticleStore& store);

struct GridSpec {
  std::vector<ModelSpec> models;
  std::vector<TemplateId> templates;
  std::vector<corpus::Ordering::Kind> orderings;
  std::vector<std::uint64_t> seeds;
  GenerationParams params;
  std::size_t max_parallel = 4;
  int max_retries = 2;
};

/// Every (event, model, template, ordering, seed) combination in that nesting order.
std::vector<GridCell> expand_grid(std::span<const corpus::Event> events, const GridSpec& spec);

using GeneratorFactory = std::function<std::shared_ptr<TextGenerator>(const ModelSpec&)>;

struct GridOutcome {
  std::size_t executed = 0;
  std::size_t skipped = 0;
  std::size_t failed = 0;
};

/// Runs the grid and appends one RunRecord per executed cell to `runs_file`.
///
/// With `resume`, cells whose key already has a successful record are skipped;
/// otherwise the file is truncated first. Cells run in batches of max_parallel and
/// each batch is appended in cell order. Generation failures after max_retries
/// are recorded and do not stop the grid.
GridOutcome run_grid(std::span<const corpus::Event> events, const corpus::ArticleStore& store,
                     const GridSpec& spec, const GeneratorFactory& generators,
                     const std::filesystem::path& runs_file, bool resume);

}  // namespace fairsumm::harness
