#pragma once

#include <array>
#include <map>
#include <memory>
#include <string>

#include "ringtrap/grid.hpp"
#include "ringtrap/interpolation.hpp"
#include "ringtrap/laplace.hpp"
#include "ringtrap/physics.hpp"

namespace ringtrap {

/// RF drive plus DC biases on the ten electrodes (V).
struct TrapConfiguration {
  DriveParameters drive;
  std::map<std::string, double> dc_voltages;  // electrode name -> V; missing = 0

  double voltage(const std::string& electrode) const;
  /// Throws ConfigError for unknown electrode names or non-finite voltages.
  void validate() const;
};

/// Harmonic surrogate frequencies (rad/s) with an optional in-plane rotation of
/// the principal axes.
struct HarmonicParameters {
  double omega_x = 0.0;
  double omega_y = 0.0;
  double omega_z = 0.0;
  double rotation = 0.0;  // rad, [0, pi)

  void validate() const;
  /// Mean of the two planar frequencies.
  double omega_r() const { return 0.5 * (omega_x + omega_y); }
};

struct Box3 {
  Vec3 lo, hi;
};

/// Single-ion potential energy (J) as a function of position (m).
class PotentialModel {
 public:
  struct Sample {
    double energy = 0.0;
    Vec3 gradient = Vec3::Zero();
    Mat3 hessian = Mat3::Zero();
  };

  virtual ~PotentialModel() = default;

  virtual bool contains(const Vec3& r) const = 0;
  /// Throws DomainError outside the domain.
  virtual Sample evaluate(const Vec3& r) const = 0;
  virtual double energy(const Vec3& r) const { return evaluate(r).energy; }
  virtual Vec3 gradient(const Vec3& r) const { return evaluate(r).gradient; }
  virtual Mat3 hessian(const Vec3& r) const { return evaluate(r).hessian; }

  /// Axis-aligned bounds of the domain (may be infinite).
  virtual Box3 domain() const = 0;
  /// Starting point for minimum searches.
  virtual Vec3 reference_point() const = 0;
};

/// U = 1/2 m (wx^2 x'^2 + wy^2 y'^2 + wz^2 z^2), (x', y') rotated by params.rotation.
class HarmonicModel final : public PotentialModel {
 public:
  HarmonicModel(const HarmonicParameters& params, const IonSpecies& species);

  bool contains(const Vec3&) const override { return true; }
  Sample evaluate(const Vec3& r) const override;
  double energy(const Vec3& r) const override;
  Vec3 gradient(const Vec3& r) const override { return hessian_ * r; }
  Mat3 hessian(const Vec3&) const override { return hessian_; }
  Box3 domain() const override;
  Vec3 reference_point() const override { return Vec3::Zero(); }

  const HarmonicParameters& params() const { return params_; }

 private:
  HarmonicParameters params_;
  Mat3 hessian_;
};

std::unique_ptr<PotentialModel> harmonic_model(const HarmonicParameters& params,
                                               const IonSpecies& species);

/// Pseudopotential plus DC electrostatic energy, interpolated
/// from a single combined energy grid.
class FieldModel final : public PotentialModel {
 public:
  /// `energy_grid` holds Phi_ps + q sum_i V_i phi_i per node (J); `rf_only`
  /// holds Phi_ps alone and locates the RF null.
  FieldModel(std::shared_ptr<const ScalarFieldGrid> energy_grid,
             std::shared_ptr<const ScalarFieldGrid> rf_only);

  bool contains(const Vec3& r) const override { return interp_.contains(r); }
  Sample evaluate(const Vec3& r) const override;
  Box3 domain() const override;
  Vec3 reference_point() const override;

  /// Minimum of the pseudopotential alone, reached from the lattice center.
  Vec3 rf_null() const;

  const ScalarFieldGrid& energy_grid() const { return interp_.grid(); }
  const GridInterpolator& rf_interpolator() const { return rf_interp_; }

 private:
  GridInterpolator interp_;
  GridInterpolator rf_interp_;
};

/// Accumulates q * sum_i V_i phi_i onto `pseudopotential` one basis at a time,
/// so callers can stream bases from disk without holding all ten.
class FieldModelBuilder {
 public:
  FieldModelBuilder(const ScalarFieldGrid& pseudopotential, const IonSpecies& species);
  void add_basis(const ScalarFieldGrid& basis, double voltage);
  std::unique_ptr<FieldModel> build() &&;

 private:
  std::shared_ptr<const ScalarFieldGrid> rf_only_;
  ScalarFieldGrid total_;
  double charge_;
};

/// Builds the field model for `config` from a solved basis set.
std::unique_ptr<FieldModel> field_model(const TrapConfiguration& config, const BasisSet& basis,
                                        const IonSpecies& species);

/// Single-ion trap properties at the potential minimum.
struct SecularFrequencies {
  Vec3 minimum = Vec3::Zero();
  Vec3 omega = Vec3::Zero();  // ascending, rad/s
  Mat3 axes = Mat3::Identity();  // columns are the matching principal axes
  double energy = 0.0;

  /// Mean of the two lowest frequencies.
  double omega_r() const { return 0.5 * (omega[0] + omega[1]); }
};

/// Local minimum of `model` reached from `start` by steepest descent with
/// backtracking, then Newton polish. Throws DomainError if the search leaves
/// the domain.
Vec3 find_single_ion_minimum(const PotentialModel& model, const Vec3& start);

/// Frequencies sqrt(eig(H)/m) at the minimum reached from the reference point.
/// Throws NonConfiningError if the Hessian has a negative eigenvalue.
SecularFrequencies secular_frequencies(const PotentialModel& model, const IonSpecies& species);

}  // namespace ringtrap
