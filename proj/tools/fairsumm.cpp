#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fairsumm/app.hpp"

int main(int argc, char** argv) {
  namespace app = fairsumm::app;

  CLI::App cli{"Fairness and quality evaluation for multi-document news summarisation"};
  cli.require_subcommand(1);

  app::CommandOptions options;
  std::string config;
  std::string input;
  std::uint64_t seed = 0;

  for (const auto& name : app::command_names()) {
    auto* sub = cli.add_subcommand(name);
    sub->add_option("--config", config, "Run configuration (JSON)")->required();
    sub->add_option("--seed", seed, "Override the grid seeds and the tournament seed");
    sub->add_flag("--stub-annotators", options.stub_annotators, "Use the configured offline annotator stub");
    sub->add_flag("--stub-generator", options.stub_generator, "Use the offline generation stub");
    sub->add_flag("--resume", options.resume, "Skip grid cells that already have a successful run");
    sub->add_option("--input", input, "Report (JSONL) or score table (CSV) for normalise/stats/report");
  }

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : app::kExitInvalid;
  }

  const auto* sub = cli.get_subcommands().front();
  options.config = config;
  options.input = input;
  if (sub->count("--seed") > 0) options.seed = seed;
  return app::run_command(sub->get_name(), options, std::cerr);
}
