#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ringtrap/crystal.hpp"
#include "ringtrap/structure.hpp"

namespace ringtrap {

/// One point of a sweep: a harmonic surrogate or a physical bias state.
using SweepPoint = std::variant<HarmonicParameters, TrapConfiguration>;

/// Increment applied at one step. Harmonic sweeps use `omega` (rad/s, added to
/// omega_x/y/z); field sweeps use `voltages` (V, added per electrode).
struct SweepDelta {
  Vec3 omega = Vec3::Zero();
  std::map<std::string, double> voltages;
};

struct SweepSpec {
  SweepPoint base;
  /// Step i runs at base + delta_0 + ... + delta_i; one step per entry.
  std::vector<SweepDelta> deltas;
  std::size_t n_ions = 1;
  SolverOptions options;
  bool warm_start = true;
  /// Random restarts added to the warm start at every step after the first.
  std::size_t fresh_restarts = 4;
  StructureThresholds thresholds;

  void validate() const;
  /// Configuration of every step, in order.
  std::vector<SweepPoint> points() const;
};

using ModelFactory = std::function<std::unique_ptr<PotentialModel>(const SweepPoint&)>;

/// Harmonic points only; field points throw ConfigError.
ModelFactory harmonic_factory(const IonSpecies& species);

struct SweepStep {
  std::size_t index = 0;
  SweepPoint point;
  CrystalState state;
  StructureReport report;
  SecularFrequencies secular;
};

struct Transition {
  std::size_t step = 0;  // first step showing the new category
  StructureCategory from{}, to{};
};

struct SweepResult {
  std::vector<SweepStep> steps;
  std::vector<Transition> transitions;
};

using SweepProgress = std::function<void(const SweepStep&)>;

/// Runs the steps in order. Solver failures are rethrown with the failing step
/// index in the message.
SweepResult run_sweep(const SweepSpec& spec, const IonSpecies& species,
                      const ModelFactory& factory, const SweepProgress& progress = {});

/// The same points visited in reverse order, starting from the final point.
SweepSpec reverse_spec(const SweepSpec& spec);

struct HysteresisFlag {
  std::size_t step = 0;  // forward step index
  StructureCategory forward{}, reverse{};
};

/// Steps where the reverse sweep's category differs from the forward one.
std::vector<HysteresisFlag> compare_hysteresis(const SweepResult& forward,
                                               const SweepResult& reverse);

struct BoundaryProbe {
  double alpha = 0.0;
  bool planar = false;
  StructureCategory category{};
  double energy = 0.0;
};

struct PlanarityBoundary {
  double alpha = 0.0;  // midpoint of the final bracket
  double lo = 0.0, hi = 0.0;
  std::vector<BoundaryProbe> probes;
};

/// Bisects on alpha = omega_z / omega_r at fixed in-plane frequencies. The
/// bracket must be non-planar at `alpha_lo` and planar at `alpha_hi`
/// (ConfigError otherwise).
PlanarityBoundary find_planarity_boundary(std::size_t n_ions, const HarmonicParameters& base,
                                          double alpha_lo, double alpha_hi, double tolerance,
                                          const SolverOptions& options,
                                          const IonSpecies& species,
                                          const StructureThresholds& thresholds = {});

}  // namespace ringtrap
