#include "ringtrap/physics.hpp"

#include <cmath>
#include <sstream>

#include "ringtrap/errors.hpp"

namespace ringtrap {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kStability: return "stability";
    case ErrorKind::kGeometry: return "geometry";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kConvergence: return "convergence";
    case ErrorKind::kNonConfining: return "non_confining";
    case ErrorKind::kClassification: return "classification";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

void IonSpecies::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw ConfigError("ion species '" + name + "': mass must be positive");
  }
  const double z = charge / constants::elementary_charge;
  if (charge == 0.0 || !std::isfinite(charge)) {
    throw ConfigError("ion species '" + name + "': charge must be nonzero");
  }
  if (std::abs(z - std::round(z)) > 1e-9) {
    throw ConfigError("ion species '" + name + "': charge must be an integer multiple of e");
  }
}

IonSpecies IonSpecies::barium138() {
  return {"Ba138", constants::barium138_mass_u * constants::atomic_mass_unit,
          constants::elementary_charge};
}

void DriveParameters::validate() const {
  if (!(rf_angular_frequency > 0.0) || !std::isfinite(rf_angular_frequency)) {
    throw ConfigError("drive: rf angular frequency must be positive");
  }
  if (!(rf_amplitude >= 0.0) || !std::isfinite(rf_amplitude)) {
    throw ConfigError("drive: rf amplitude must be non-negative");
  }
}

double critical_aspect_ratio(std::size_t n_ions) {
  if (n_ions == 0) throw ConfigError("critical_aspect_ratio: n_ions must be >= 1");
  const double w1 = constants::planarity_omega1;
  const double pi3 = constants::pi * constants::pi * constants::pi;
  const double alpha_sq = std::sqrt(96.0 * static_cast<double>(n_ions) / (pi3 * w1 * w1 * w1));
  return std::sqrt(alpha_sq);
}

void check_mathieu_stability(double q) {
  if (!std::isfinite(q) || std::abs(q) >= constants::mathieu_q_stability_bound) {
    std::ostringstream msg;
    msg << "Mathieu q = " << q << " is outside the first stability region (|q| < "
        << constants::mathieu_q_stability_bound << ")";
    throw StabilityError(msg.str(), q);
  }
}

double micromotion_amplitude(double q_r, double displacement) {
  if (q_r < 0.0) throw StabilityError("micromotion_amplitude: q_r must be >= 0", q_r);
  check_mathieu_stability(q_r);
  if (!(displacement >= 0.0)) throw ConfigError("micromotion_amplitude: displacement must be >= 0");
  return q_r * displacement / 2.0;
}

double mathieu_q(double curvature, const DriveParameters& drive, const IonSpecies& species) {
  drive.validate();
  species.validate();
  const double omega = drive.rf_angular_frequency;
  return 2.0 * species.charge * drive.rf_amplitude * curvature / (species.mass * omega * omega);
}

double pseudo_secular_frequency(double q, const DriveParameters& drive) {
  check_mathieu_stability(q);
  return std::abs(q) * drive.rf_angular_frequency / (2.0 * std::numbers::sqrt2);
}

}  // namespace ringtrap
