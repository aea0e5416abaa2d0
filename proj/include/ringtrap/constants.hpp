#pragma once

#include <numbers>

namespace ringtrap::constants {

//---------------------------------------------------------------------------//
// CODATA 2018 values, SI units.
//
//  symbol                 | value               | unit
//  ---------------------- | ------------------- | ------
//  elementary_charge      | 1.602176634e-19     | C (exact)
//  vacuum_permittivity    | 8.8541878128e-12    | F/m
//  atomic_mass_unit       | 1.66053906660e-27   | kg
//  coulomb_constant       | 1/(4 pi eps0)       | N m^2 / C^2
//---------------------------------------------------------------------------//
inline constexpr double pi = std::numbers::pi;
inline constexpr double elementary_charge = 1.602176634e-19;
inline constexpr double vacuum_permittivity = 8.8541878128e-12;
inline constexpr double atomic_mass_unit = 1.66053906660e-27;
inline constexpr double coulomb_constant = 1.0 / (4.0 * pi * vacuum_permittivity);

// Ba-138 atomic mass in u.
inline constexpr double barium138_mass_u = 137.9052;

// Planar-to-3D transition parameter of the large-N criterion.
inline constexpr double planarity_omega1 = 1.11;

// Edge of the first Mathieu stability region along a = 0.
inline constexpr double mathieu_q_stability_bound = 0.908;

}  // namespace ringtrap::constants
