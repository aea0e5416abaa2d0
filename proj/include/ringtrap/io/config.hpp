#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ringtrap/crystal.hpp"
#include "ringtrap/geometry.hpp"
#include "ringtrap/laplace.hpp"
#include "ringtrap/structure.hpp"
#include "ringtrap/sweep.hpp"

namespace ringtrap::io {

struct FieldBackend {
  ElectrodeGeometry geometry;
  double spacing = 0.1e-3;  // m
  LaplaceOptions laplace;
  TrapConfiguration trap;
  std::optional<Vec3> rf_null;  // override of the pseudopotential minimum
};

struct HarmonicBackend {
  HarmonicParameters params;
};

struct MicromotionConfig {
  std::optional<double> q_r;    // harmonic runs only; field runs derive it
  std::optional<Vec3> rf_null;  // harmonic runs only; default origin
};

struct SweepConfig {
  std::vector<SweepDelta> deltas;
  bool warm_start = true;
  std::size_t fresh_restarts = 4;
  bool reverse = false;  // also run the reversed sweep and report hysteresis
};

struct PlanarityConfig {
  std::vector<std::size_t> n_ions;  // empty: the run's n_ions
  double alpha_min = 0.5;
  double alpha_max = 4.0;
  double tolerance = 0.02;
};

enum class Projection { kXY, kXZ, kYZ };

struct RenderSpec {
  Projection projection = Projection::kXY;
  double marker_radius = 1.5e-6;  // m
  double scale_bar = 10e-6;       // m
  int width = 800;                // px
  int height = 600;
  /// 0 fits the crystal to the canvas.
  double pixels_per_meter = 0.0;

  void validate() const;
};

struct RunConfig {
  IonSpecies species = IonSpecies::barium138();
  std::variant<HarmonicBackend, FieldBackend> backend;
  std::size_t n_ions = 1;
  SolverOptions solver;
  StructureThresholds structure;
  MicromotionConfig micromotion;
  std::optional<SweepConfig> sweep;
  PlanarityConfig planarity;
  RenderSpec render;
  std::filesystem::path output_dir = "out";
  std::filesystem::path cache_dir = "cache";
  std::uint64_t seed = 0;
  int threads = 0;

  bool harmonic() const { return std::holds_alternative<HarmonicBackend>(backend); }
  const FieldBackend& field() const { return std::get<FieldBackend>(backend); }
  const HarmonicBackend& harmonic_backend() const { return std::get<HarmonicBackend>(backend); }
};

/// Parses and validates a JSON config. `source` names the document in errors.
/// Throws ConfigError (with line and column for syntax errors, the key path
/// for schema errors).
RunConfig parse_config(const std::string& text, const std::string& source = "config");
/// Throws IoError when the file cannot be read.
RunConfig load_config(const std::filesystem::path& path);

const char* to_string(Projection p);

}  // namespace ringtrap::io
