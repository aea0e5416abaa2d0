#pragma once

#include <cstddef>
#include <string>

#include "ringtrap/constants.hpp"

namespace ringtrap {

/// An ion species. Charge is stored in coulombs but must be an integer
/// multiple of the elementary charge.
struct IonSpecies {
  std::string name;
  double mass = 0.0;    // kg
  double charge = 0.0;  // C

  /// Throws ConfigError when mass <= 0, charge == 0, or charge is not integral in e.
  void validate() const;

  /// q^2 / (4 pi eps0), the prefactor of the pair Coulomb energy.
  double coulomb_prefactor() const { return constants::coulomb_constant * charge * charge; }

  static IonSpecies barium138();
};

/// RF drive: zero-to-peak amplitude and angular frequency.
struct DriveParameters {
  double rf_amplitude = 0.0;          // V
  double rf_angular_frequency = 0.0;  // rad/s

  void validate() const;
};

/// Aspect ratio omega_z / omega_r below which an N-ion crystal is expected to
/// leave the plane, alpha^2 = sqrt(96 N / (pi^3 omega1^3)).
double critical_aspect_ratio(std::size_t n_ions);

/// Excess in-plane micromotion amplitude q_r * d / 2 (m).
/// Throws StabilityError if q_r is outside [0, 0.908), ConfigError if d < 0.
double micromotion_amplitude(double q_r, double displacement);

/// Mathieu q for one axis: 2 e V c / (m Omega^2), where c is the second
/// derivative (1/m^2) of the unit-voltage RF basis potential at the trap center.
double mathieu_q(double curvature, const DriveParameters& drive, const IonSpecies& species);

/// Lowest-order pseudopotential secular frequency |q| Omega / (2 sqrt 2), rad/s.
double pseudo_secular_frequency(double q, const DriveParameters& drive);

/// Throws StabilityError if |q| >= 0.908.
void check_mathieu_stability(double q);

}  // namespace ringtrap
