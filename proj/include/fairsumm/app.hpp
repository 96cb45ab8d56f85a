#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairsumm/corpus.hpp"
#include "fairsumm/harness.hpp"
#include "fairsumm/pipeline.hpp"

namespace fairsumm::app {

namespace fs = std::filesystem;

struct PathsConfig {
  fs::path articles;
  fs::path out_dir;
  /// Annotation cache file; defaults to <out_dir>/annotations.jsonl.
  fs::path cache;
  /// Recorded annotator exchanges used by the "replay" stub.
  fs::path annotator_fixture;
};

struct EndpointsConfig {
  std::string generation;
  std::string judge;
  std::string annotator;
  int timeout_ms = 30000;
  int max_retries = 2;
  int max_parallel = 4;
  std::string bearer_token;
  std::string annotator_model_version = "unversioned";
};

struct StubConfig {
  /// "constant", "hash" or "replay".
  std::string annotator = "hash";
  Sentiment sentiment = Sentiment::kNeutral;
  Leaning political = Leaning::kCenter;
  std::array<double, 3> document_confidence = {1.0, 1.0, 1.0};
  std::string entity_type = "PERSON";
  /// "extractive", "echo" or "fail".
  std::string generator = "extractive";
};

struct TournamentConfig {
  bool both_orders = false;
  std::size_t max_parallel = 1;
};

struct RunConfig {
  std::uint64_t seed = 0;
  PathsConfig paths;
  EndpointsConfig endpoints;
  corpus::CorpusConfig corpus;
  harness::GridSpec grid;
  pipeline::MetricOptions metrics;
  TournamentConfig tournament;
  StubConfig stubs;

  const harness::ModelSpec& model(std::string_view id) const;
};

/// Parses a config document. Relative paths resolve against `base_dir`. Unknown
/// keys, bad values and a missing articles file raise ValidationError.
RunConfig parse_config(const nlohmann::json& doc, const fs::path& base_dir);
RunConfig load_config(const fs::path& file);

/// FAIRSUMM_GENERATION_URL, FAIRSUMM_JUDGE_URL and FAIRSUMM_ANNOTATOR_URL replace
/// the corresponding endpoint when set and non-empty.
void apply_env_overrides(RunConfig& config);

struct CommandOptions {
  fs::path config;
  std::optional<std::uint64_t> seed;
  bool stub_annotators = false;
  bool stub_generator = false;
  bool resume = false;
  /// Input file for normalise and stats; defaults to <out_dir>/fairness_report.jsonl.
  fs::path input;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitInvalid = 2;

/// Runs a subcommand and maps errors to exit codes. Progress and errors go to `log`.
int run_command(std::string_view name, const CommandOptions& options, std::ostream& log);

const std::vector<std::string>& command_names();

// Individual commands; they throw on validation errors and return 0 or 1.
int cmd_build_corpus(const RunConfig& config, std::ostream& log);
int cmd_summarise(const RunConfig& config, const CommandOptions& options, std::ostream& log);
int cmd_annotate(const RunConfig& config, const CommandOptions& options, std::ostream& log);
int cmd_evaluate(const RunConfig& config, const CommandOptions& options, std::ostream& log);
int cmd_normalise(const RunConfig& config, const CommandOptions& options, std::ostream& log);
int cmd_stats(const RunConfig& config, const CommandOptions& options, std::ostream& log);
int cmd_tournament(const RunConfig& config, const CommandOptions& options, std::ostream& log);
int cmd_report(const RunConfig& config, const CommandOptions& options, std::ostream& log);

/// Normalises a score CSV whose first column labels rows and whose remaining
/// columns are metric names. Writes the normalised CSV and the spec JSON.
void normalise_score_csv(const fs::path& input, const fs::path& output_csv,
                         const fs::path& spec_json);

/// "%.6g" with '.' as the decimal separator; empty for nullopt.
std::string format_number(std::optional<double> v);

}  // namespace fairsumm::app
