#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ringtrap/errors.hpp"
#include "ringtrap/io/config.hpp"

namespace ringtrap::io {

enum class Command {
  kFieldsSolve,
  kFieldsInfo,
  kCrystalSolve,
  kCrystalModes,
  kCrystalClassify,
  kSweepRun,
  kPlanarityBoundary,
  kRender,
};

const char* to_string(Command c);

struct RunRequest {
  Command command = Command::kCrystalSolve;
  RunConfig config;
  /// Existing state.json for classify, modes and render (solved fresh when absent).
  std::optional<std::filesystem::path> state_path;
  bool verbose = false;
  std::ostream* log = nullptr;  // progress and diagnostics; null = silent
};

/// 0 success, 2 configuration, 3 solver failure, 4 cache or file error.
int exit_code(ErrorKind kind);

/// Runs one command end to end. Artifacts and manifest.json go to
/// config.output_dir; on failure error.json is written there instead and the
/// matching exit code returned.
int orchestrate(const RunRequest& request);

/// Files written by a run, in manifest order.
struct ManifestEntry {
  std::string path;  // relative to the output directory
  std::string type;
  std::string sha256;
  std::string stage;
};

}  // namespace ringtrap::io
