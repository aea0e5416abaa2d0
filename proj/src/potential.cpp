#include "ringtrap/potential.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "ringtrap/errors.hpp"
#include "ringtrap/geometry.hpp"
#include "ringtrap/pseudopotential.hpp"

namespace ringtrap {

double TrapConfiguration::voltage(const std::string& electrode) const {
  auto it = dc_voltages.find(electrode);
  return it == dc_voltages.end() ? 0.0 : it->second;
}

void TrapConfiguration::validate() const {
  drive.validate();
  for (const auto& [name, v] : dc_voltages) {
    const auto label = parse_electrode(name);
    if (!label || *label == NodeLabel::kGround)
      throw ConfigError("unknown electrode '" + name + "'");
    if (!std::isfinite(v)) throw ConfigError("electrode '" + name + "': voltage must be finite");
  }
}

void HarmonicParameters::validate() const {
  if (!(omega_x > 0 && omega_y > 0 && omega_z > 0) || !std::isfinite(omega_x) ||
      !std::isfinite(omega_y) || !std::isfinite(omega_z))
    throw ConfigError("harmonic parameters: all frequencies must be positive");
  if (!(rotation >= 0.0 && rotation < std::numbers::pi))
    throw ConfigError("harmonic parameters: rotation must lie in [0, pi)");
}

// ---------------------------------------------------------------------------

HarmonicModel::HarmonicModel(const HarmonicParameters& params, const IonSpecies& species)
    : params_(params) {
  params.validate();
  species.validate();
  const double c = std::cos(params.rotation), s = std::sin(params.rotation);
  Mat3 rot;
  rot << c, s, 0, -s, c, 0, 0, 0, 1;  // maps (x, y, z) to principal coordinates
  const Vec3 k = species.mass * Vec3(params.omega_x * params.omega_x,
                                     params.omega_y * params.omega_y,
                                     params.omega_z * params.omega_z);
  hessian_ = rot.transpose() * k.asDiagonal() * rot;
  hessian_(0, 2) = hessian_(2, 0) = hessian_(1, 2) = hessian_(2, 1) = 0.0;
  hessian_(1, 0) = hessian_(0, 1);
}

double HarmonicModel::energy(const Vec3& r) const { return 0.5 * r.dot(hessian_ * r); }

PotentialModel::Sample HarmonicModel::evaluate(const Vec3& r) const {
  Sample s;
  s.gradient = hessian_ * r;
  s.energy = 0.5 * r.dot(s.gradient);
  s.hessian = hessian_;
  return s;
}

Box3 HarmonicModel::domain() const {
  const double inf = std::numeric_limits<double>::infinity();
  return {Vec3::Constant(-inf), Vec3::Constant(inf)};
}

std::unique_ptr<PotentialModel> harmonic_model(const HarmonicParameters& params,
                                               const IonSpecies& species) {
  return std::make_unique<HarmonicModel>(params, species);
}

// ---------------------------------------------------------------------------

FieldModel::FieldModel(std::shared_ptr<const ScalarFieldGrid> energy_grid,
                       std::shared_ptr<const ScalarFieldGrid> rf_only)
    : interp_(std::move(energy_grid)), rf_interp_(std::move(rf_only)) {
  if (!interp_.grid().shape.same_lattice(rf_interp_.grid().shape))
    throw ConfigError("field model: energy and RF grids must share a lattice");
}

PotentialModel::Sample FieldModel::evaluate(const Vec3& r) const {
  const auto t = interp_.evaluate(r);
  return {t.value, t.gradient, t.hessian};
}

Box3 FieldModel::domain() const {
  const GridShape& s = interp_.grid().shape;
  const Vec3 extent = s.spacing * Vec3(double(s.dims[0] - 1), double(s.dims[1] - 1),
                                       double(s.dims[2] - 1));
  return {s.origin + Vec3::Constant(s.spacing), s.origin + extent - Vec3::Constant(s.spacing)};
}

Vec3 FieldModel::reference_point() const {
  const GridShape& s = interp_.grid().shape;
  return s.position(s.dims[0] / 2, s.dims[1] / 2, s.dims[2] / 2);
}

namespace {

class InterpolatorModel final : public PotentialModel {
 public:
  InterpolatorModel(const GridInterpolator& interp, Vec3 ref, Box3 box)
      : interp_(interp), ref_(std::move(ref)), box_(std::move(box)) {}
  bool contains(const Vec3& r) const override { return interp_.contains(r); }
  Sample evaluate(const Vec3& r) const override {
    const auto t = interp_.evaluate(r);
    return {t.value, t.gradient, t.hessian};
  }
  Box3 domain() const override { return box_; }
  Vec3 reference_point() const override { return ref_; }

 private:
  const GridInterpolator& interp_;
  Vec3 ref_;
  Box3 box_;
};

}  // namespace

Vec3 FieldModel::rf_null() const {
  InterpolatorModel rf(rf_interp_, reference_point(), domain());
  return find_single_ion_minimum(rf, reference_point());
}

FieldModelBuilder::FieldModelBuilder(const ScalarFieldGrid& pseudopotential,
                                     const IonSpecies& species)
    : rf_only_(std::make_shared<const ScalarFieldGrid>(pseudopotential)),
      total_(pseudopotential),
      charge_(species.charge) {
  species.validate();
}

void FieldModelBuilder::add_basis(const ScalarFieldGrid& basis, double voltage) {
  if (!basis.shape.same_lattice(total_.shape))
    throw ConfigError("field model: basis grids must share the pseudopotential lattice");
  if (voltage == 0.0) return;
  const double f = charge_ * voltage;
  for (std::size_t i = 0; i < total_.values.size(); ++i) total_.values[i] += f * basis.values[i];
}

std::unique_ptr<FieldModel> FieldModelBuilder::build() && {
  return std::make_unique<FieldModel>(std::make_shared<const ScalarFieldGrid>(std::move(total_)),
                                      std::move(rf_only_));
}

std::unique_ptr<FieldModel> field_model(const TrapConfiguration& config, const BasisSet& basis,
                                        const IonSpecies& species) {
  config.validate();
  const ScalarFieldGrid pseudo = pseudopotential_grid(basis.rf(), config.drive, species);
  FieldModelBuilder builder(pseudo, species);
  for (const auto& name : electrode_names()) builder.add_basis(basis.at(name), config.voltage(name));
  return std::move(builder).build();
}

// ---------------------------------------------------------------------------

Vec3 find_single_ion_minimum(const PotentialModel& model, const Vec3& start) {
  if (!model.contains(start)) throw DomainError("minimum search starts outside the model domain");
  Vec3 x = start;
  auto s = model.evaluate(x);
  Eigen::SelfAdjointEigenSolver<Mat3> eig(s.hessian);
  double lam_max = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (!(lam_max > 0)) lam_max = 1.0;
  // Force an ion would feel 1 mm from the minimum; sets the convergence scale.
  const double force_scale = lam_max * 1e-3;

  for (int iter = 0; iter < 10000; ++iter) {
    const double gnorm = s.gradient.norm();
    if (gnorm < 1e-12 * force_scale) break;

    Eigen::SelfAdjointEigenSolver<Mat3> es(s.hessian);
    Vec3 d;
    if (es.eigenvalues().minCoeff() > 0) {
      d = -es.eigenvectors() *
          (es.eigenvalues().cwiseInverse().asDiagonal() * (es.eigenvectors().transpose() * s.gradient));
    } else {
      d = -s.gradient / std::max(es.eigenvalues().cwiseAbs().maxCoeff(), lam_max);
    }
    const double slope = s.gradient.dot(d);
    double t = 1.0;
    bool accepted = false;
    bool hit_edge = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      const Vec3 xt = x + t * d;
      if (!model.contains(xt)) {
        hit_edge = true;
        continue;
      }
      auto st = model.evaluate(xt);
      if (st.energy <= s.energy + 1e-4 * t * slope) {
        x = xt;
        s = st;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (gnorm < 1e-9 * force_scale) break;  // roundoff floor
      if (hit_edge) throw DomainError("potential minimum lies on the edge of the model domain");
      std::ostringstream msg;
      msg << "single-ion minimum search stalled with |grad U| = " << gnorm << " N";
      throw ConvergenceError(msg.str(), gnorm);
    }
  }
  return x;
}

SecularFrequencies secular_frequencies(const PotentialModel& model, const IonSpecies& species) {
  species.validate();
  SecularFrequencies out;
  out.minimum = find_single_ion_minimum(model, model.reference_point());
  const auto s = model.evaluate(out.minimum);
  out.energy = s.energy;
  Eigen::SelfAdjointEigenSolver<Mat3> es(s.hessian);
  const Vec3 lam = es.eigenvalues();
  if (lam.minCoeff() < 0) {
    std::ostringstream msg;
    msg << "trap is not confining at its stationary point; Hessian eigenvalues " << lam.transpose()
        << " J/m^2";
    throw NonConfiningError(msg.str());
  }
  for (int a = 0; a < 3; ++a) out.omega[a] = std::sqrt(lam[a] / species.mass);
  out.axes = es.eigenvectors();
  return out;
}

}  // namespace ringtrap
