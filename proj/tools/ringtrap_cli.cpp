// Command-line driver: ringtrap <group> <command> --config run.json [overrides]

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ringtrap/io/config.hpp"
#include "ringtrap/io/orchestrate.hpp"

namespace {

using ringtrap::io::Command;

int report_early_failure(const std::filesystem::path& out_dir, const ringtrap::Error& e) {
  const int code = ringtrap::io::exit_code(e.kind());
  std::cerr << "error (" << ringtrap::to_string(e.kind()) << "): " << e.what() << "\n";
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  std::ofstream f(out_dir / "error.json");
  f << nlohmann::json{{"error", ringtrap::to_string(e.kind())}, {"message", e.what()}, {"exit_code", code}}
           .dump(2)
    << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sectored-ring ion trap: fields, crystals, sweeps"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir, cache_dir, state_path;
  std::uint64_t seed = 0;
  int threads = 0;
  bool verbose = false;
  app.add_option("--config", config_path, "Run configuration (JSON)")->required();
  auto* out_opt = app.add_option("--out", out_dir, "Output directory (overrides output_dir)");
  auto* cache_opt = app.add_option("--cache", cache_dir, "Field basis cache directory (overrides cache_dir)");
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides seed)");
  auto* threads_opt = app.add_option("--threads", threads, "Worker threads (overrides threads)")
                          ->check(CLI::NonNegativeNumber);
  app.add_flag("--verbose,-v", verbose, "Extra diagnostics on stderr");

  Command command = Command::kCrystalSolve;
  auto leaf = [&](CLI::App* parent, const char* name, const char* help, Command c) {
    auto* sub = parent->add_subcommand(name, help);
    sub->callback([&command, c] { command = c; });
    return sub;
  };

  auto* fields = app.add_subcommand("fields", "Electrode basis potentials")->require_subcommand(1);
  leaf(fields, "solve", "Solve (or load cached) basis potentials", Command::kFieldsSolve);
  leaf(fields, "info", "RF-only aspect ratio, Mathieu q and symmetry checks", Command::kFieldsInfo);

  auto* crystal = app.add_subcommand("crystal", "Ion crystal equilibria")->require_subcommand(1);
  leaf(crystal, "solve", "Find the ground-state crystal", Command::kCrystalSolve);
  leaf(crystal, "modes", "Normal modes about an equilibrium", Command::kCrystalModes)
      ->add_option("--state", state_path, "Use this state.json instead of solving");
  leaf(crystal, "classify", "Structure report for a crystal", Command::kCrystalClassify)
      ->add_option("--state", state_path, "Use this state.json instead of solving");

  auto* sweep = app.add_subcommand("sweep", "Parameter sweeps")->require_subcommand(1);
  leaf(sweep, "run", "Run the configured sweep", Command::kSweepRun);

  auto* planarity = app.add_subcommand("planarity", "Planar/non-planar boundary")->require_subcommand(1);
  leaf(planarity, "boundary", "Bisect on the aspect ratio", Command::kPlanarityBoundary);

  leaf(&app, "render", "SVG image of a crystal", Command::kRender)
      ->add_option("--state", state_path, "Render this state.json instead of solving");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  ringtrap::io::RunRequest req;
  req.command = command;
  req.verbose = verbose;
  req.log = &std::cerr;
  try {
    req.config = ringtrap::io::load_config(config_path);
  } catch (const ringtrap::Error& e) {
    return report_early_failure(*out_opt ? out_dir : "out", e);
  }
  if (*out_opt) req.config.output_dir = out_dir;
  if (*cache_opt) req.config.cache_dir = cache_dir;
  if (*seed_opt) req.config.seed = seed;
  if (*threads_opt) req.config.threads = threads;
  if (!state_path.empty()) req.state_path = state_path;
  return ringtrap::io::orchestrate(req);
}
