#include "tlswim/config.hpp"
#include "tlswim/runner.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Three-link swimmer simulation, training and navigation"};
  app.set_version_flag("--version", tlswim::version());
  app.require_subcommand(0, 1);

  bool print_defaults = false;
  app.add_flag("--print-defaults", print_defaults, "Print the default configuration and exit");

  tlswim::RunRequest request;
  std::string config_path, out, checkpoint_path;
  std::uint64_t seed = 0;
  int workers = 0;
  long long episodes = 0;

  const std::vector<std::pair<std::string, std::string>> descriptions{
      {"simulate-gait", "Run a prescribed stroke and report per-cycle metrics"},
      {"train", "Train a policy with PPO"},
      {"evaluate", "Measure success rate, speed and efficiency of a checkpoint"},
      {"navigate", "Trace a waypoint course with a checkpoint"},
      {"pursue", "Chase a moving, diffusing target with a checkpoint"},
      {"sweep", "Train and evaluate over a range of c or N_s values"},
  };
  for (const auto& [name, help] : descriptions) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Master seed");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--workers", workers, "Parallel workers")->check(CLI::PositiveNumber);
    sub->add_option("--episodes", episodes, "Override the number of training episodes")
        ->check(CLI::PositiveNumber);
    sub->add_option("--checkpoint", checkpoint_path, "Policy checkpoint (resume for train)");
    sub->callback([&request, name = name] { request.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(tlswim::ExitCode::usage);
  }

  if (print_defaults) {
    std::cout << tlswim::default_config_json() << '\n';
    return 0;
  }
  if (request.command.empty()) {
    std::cerr << app.help();
    return static_cast<int>(tlswim::ExitCode::usage);
  }

  CLI::App* sub = app.get_subcommand(request.command);
  if (sub->count("--config")) request.config = config_path;
  if (sub->count("--seed")) request.overrides.seed = seed;
  if (sub->count("--out")) request.overrides.out = out;
  if (sub->count("--workers")) request.overrides.workers = workers;
  if (sub->count("--episodes")) request.overrides.episodes = episodes;
  if (sub->count("--checkpoint")) request.checkpoint = checkpoint_path;
  request.log = &std::cerr;
  return tlswim::run(request);
}
