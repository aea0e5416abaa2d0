#pragma once

#include <array>

#include "ringtrap/grid.hpp"
#include "ringtrap/physics.hpp"

namespace ringtrap {

/// Time-averaged RF potential energy q^2 V^2 |grad phi_rf|^2 / (4 m Omega^2), in J per node.
/// Gradients use central differences on free nodes and one-sided differences
/// next to electrodes; nodes inside conductors are field-free and hold 0.
ScalarFieldGrid pseudopotential_grid(const ScalarFieldGrid& rf_basis, const DriveParameters& drive,
                                     const IonSpecies& species);

/// Gradient of a grid at a node using the same stencil rules as the pseudopotential.
Vec3 node_gradient(const ScalarFieldGrid& grid, std::size_t idx);

struct CenterCurvatures {
  Vec3 curvature = Vec3::Zero();  // d2/dx2, d2/dy2, d2/dz2 in grid units / m^2
  std::array<std::size_t, 3> node{0, 0, 0};
  Vec3 position = Vec3::Zero();
};

/// Five-point second derivatives at the node of the local minimum reached by
/// discrete descent from the lattice center. Throws DomainError when the
/// descent or its stencil leaves the free region.
CenterCurvatures curvatures_at_center(const ScalarFieldGrid& grid);

/// Five-point second derivatives at a given node (stencil must be free).
Vec3 curvatures_at_node(const ScalarFieldGrid& grid, const std::array<std::size_t, 3>& node);

/// sqrt(c_z / mean(c_x, c_y)); throws NonConfiningError if any curvature <= 0.
double aspect_ratio(const Vec3& curvature);
double aspect_ratio_rf(const ScalarFieldGrid& pseudopotential);

/// Node-wise symmetry residuals of a grid about its central node, each
/// normalized by the largest |value| among the compared nodes.
struct SymmetryCheck {
  double mirror_z = 0.0;   // z -> -z
  double rotate_90 = 0.0;  // (x, y) -> (-y, x)
  double rotate_45 = 0.0;  // 45 degrees about z, through the interpolant, within `radius`
  double scale = 0.0;
};

SymmetryCheck check_symmetry(const ScalarFieldGrid& grid, double radius);

/// Everything the RF-only field says about the trap center.
struct RfAnalysis {
  CenterCurvatures pseudo;      // J / m^2
  double alpha = 0.0;           // omega_z / omega_r from the pseudopotential
  Vec3 rf_curvature;            // second derivatives of the unit RF basis at the null, 1/m^2
  Vec3 q;                       // Mathieu q per axis
  double q_r = 0.0;             // mean |q_x|, |q_y|
  Vec3 pseudo_frequency;        // |q| Omega / (2 sqrt 2), rad/s
  Vec3 curvature_frequency;     // sqrt(c / m) from the pseudopotential, rad/s
};

RfAnalysis analyze_rf(const ScalarFieldGrid& rf_basis, const ScalarFieldGrid& pseudopotential,
                      const DriveParameters& drive, const IonSpecies& species);

}  // namespace ringtrap
