#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ringtrap/grid.hpp"

namespace ringtrap {

/// Sectored-ring trap: eight flat wedge electrodes in the z = 0 plane and two
/// bored conical endcaps on the z axis, inside a grounded cubic shell.
///
/// Endcap solid (top; bottom is the z -> -z mirror), with z_f = separation / 2:
///   z_f <= z <= z_f + endcap_length
///   r >= z tan(asin(NA))                               (optical bore)
///   r <= min(endcap_outer_radius, r_tip + (z - z_f) tan(outer_half_angle))
/// where r_tip = z_f tan(asin(NA)) + endcap_tip_wall.
struct ElectrodeGeometry {
  double ring_inner_radius = 2e-3;
  double ring_outer_radius = 5e-3;
  double sector_wedge_angle_deg = 20.0;
  double sector_pitch_deg = 45.0;
  int sector_count = 8;
  double ring_thickness = 0.5e-3;
  double endcap_separation = 1e-3;
  double endcap_numerical_aperture = 0.5;
  double endcap_outer_radius = 6e-3;
  double endcap_length = 5e-3;
  double endcap_tip_wall = 0.3e-3;
  double endcap_outer_half_angle_deg = 60.0;
  double bounding_box = 40e-3;  // side of the grounded cube

  /// Throws GeometryError on violated invariants.
  void validate() const;
  double bore_half_angle() const;  // rad

  /// SHA-256 over a canonical text form of every field.
  Digest hash() const;
};

/// Electrode names used in configs, caches, and basis sets:
/// sector_1..sector_8, endcap_top, endcap_bottom, plus the pseudo-electrodes
/// "ground" (outer shell) and "rf" (both endcaps together).
std::string electrode_name(NodeLabel label);
std::optional<NodeLabel> parse_electrode(std::string_view name);
const std::vector<std::string>& electrode_names();  // the 10 physical electrodes

/// Labels driven to 1 V for the named basis.
std::vector<NodeLabel> basis_labels(std::string_view basis_id);

/// Rasterize onto a lattice of the given spacing covering the bounding box,
/// with the node grid centered on `offset` (default: a node at the origin).
/// Every node inside an electrode solid carries that electrode's label; the
/// outer faces are ground.
ElectrodeMask rasterize(const ElectrodeGeometry& geometry, double spacing,
                        const Vec3& offset = Vec3::Zero());

}  // namespace ringtrap
