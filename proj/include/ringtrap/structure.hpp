#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ringtrap/crystal.hpp"

namespace ringtrap {

enum class StructureCategory {
  kPlanar,
  kPlanarZigzag,      // in-plane zig-zag
  kOutOfPlaneZigzag,
  kLinear,
  kThreeDimensional,
};

const char* to_string(StructureCategory c);
std::optional<StructureCategory> parse_category(const std::string& s);

struct StructureThresholds {
  /// Planarity, linearity and minimum zig-zag amplitude, as a fraction of the
  /// mean nearest-neighbour spacing.
  double eta = 0.05;
  /// A new shell starts where the radial gap exceeds this times the median
  /// in-plane nearest-neighbour spacing.
  double shell_gap_factor = 0.5;
  /// Fraction of adjacent ions (along the long axis) whose transverse offsets
  /// must alternate in sign.
  double zigzag_fraction = 0.75;
  /// Transverse offsets beyond this fraction of the spacing mean separate rows,
  /// not a zig-zag.
  double zigzag_max_amplitude = 0.6;

  void validate() const;
};

struct SpacingStats {
  double min = 0.0, mean = 0.0, max = 0.0;  // m
  std::vector<double> per_ion;              // nearest-neighbour distance of each ion
};

struct StructureReport {
  StructureCategory category = StructureCategory::kPlanar;
  /// max |z - median z| below eta * spacing.
  bool planar_family = true;
  std::vector<std::size_t> shell_occupancies;  // innermost first; empty if undefined
  SpacingStats spacing;                        // zeros for N = 1
  double extent_major = 0.0;                   // in-plane principal semi-axes (m)
  double extent_minor = 0.0;
  double long_axis_angle = 0.0;                // rad, in [0, pi)
  double max_abs_z = 0.0;                      // max |z - median z| (m)
  std::vector<double> micromotion;             // per-ion amplitude (m), when requested
};

/// Nearest-neighbour distances. Throws ConfigError for N < 2.
SpacingStats spacing_stats(const Positions& positions);

/// Shells by radial distance from the in-plane centroid. Throws
/// ClassificationError when the positions are not planar within `thresholds`.
std::vector<std::size_t> shell_decomposition(const Positions& positions,
                                             const StructureThresholds& thresholds = {});

StructureReport classify(const Positions& positions, const StructureThresholds& thresholds = {});
/// Same, for a converged state (ConfigError otherwise).
StructureReport classify(const CrystalState& state, const StructureThresholds& thresholds = {});

struct MicromotionMap {
  double q_r = 0.0;
  Vec3 rf_null = Vec3::Zero();
  /// In-plane excursion vectors (q_r / 2) (r_i - r_null), z component zero.
  std::vector<Vec3> excursions;
  std::vector<double> amplitudes;  // their norms

  /// Amplitude of the relative micromotion of ions i and j, (q_r / 2) |r_i - r_j| in plane.
  double differential(std::size_t i, std::size_t j) const;
};

/// Throws StabilityError for q_r outside [0, 0.908).
MicromotionMap micromotion_map(const Positions& positions, double q_r, const Vec3& rf_null);

}  // namespace ringtrap
