#include "ringtrap/structure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "ringtrap/errors.hpp"

namespace ringtrap {
namespace {

struct PlaneFrame {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  Eigen::Vector2d major = Eigen::Vector2d::UnitX();
  Eigen::Vector2d minor = Eigen::Vector2d::UnitY();
  double extent_major = 0.0, extent_minor = 0.0;
};

PlaneFrame plane_frame(const Positions& x) {
  PlaneFrame f;
  for (const auto& r : x) f.centroid += r.head<2>();
  f.centroid /= double(x.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& r : x) {
    const Eigen::Vector2d d = r.head<2>() - f.centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  f.major = es.eigenvectors().col(1);
  f.minor = es.eigenvectors().col(0);
  for (const auto& r : x) {
    const Eigen::Vector2d d = r.head<2>() - f.centroid;
    f.extent_major = std::max(f.extent_major, std::abs(d.dot(f.major)));
    f.extent_minor = std::max(f.extent_minor, std::abs(d.dot(f.minor)));
  }
  // Round crystals: the principal axes come from the covariance, the names from the extents.
  if (f.extent_minor > f.extent_major) {
    std::swap(f.major, f.minor);
    std::swap(f.extent_major, f.extent_minor);
  }
  return f;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double max_z_deviation(const Positions& x) {
  std::vector<double> z;
  for (const auto& r : x) z.push_back(r.z());
  const double zm = median(z);
  double m = 0.0;
  for (double v : z) m = std::max(m, std::abs(v - zm));
  return m;
}

// Fraction of sign flips between neighbours along the long axis, and the
// largest transverse offset.
struct Alternation {
  double fraction = 0.0;
  double amplitude = 0.0;
};

Alternation alternation(const std::vector<std::pair<double, double>>& along_transverse) {
  auto v = along_transverse;
  std::sort(v.begin(), v.end());
  Alternation a;
  std::size_t flips = 0;
  for (std::size_t k = 0; k + 1 < v.size(); ++k)
    if (v[k].second * v[k + 1].second < 0) ++flips;
  for (const auto& p : v) a.amplitude = std::max(a.amplitude, std::abs(p.second));
  a.fraction = v.size() > 1 ? double(flips) / double(v.size() - 1) : 0.0;
  return a;
}

bool is_zigzag(const Alternation& a, double spacing, const StructureThresholds& t) {
  return a.fraction >= t.zigzag_fraction && a.amplitude > t.eta * spacing &&
         a.amplitude < t.zigzag_max_amplitude * spacing;
}

}  // namespace

const char* to_string(StructureCategory c) {
  switch (c) {
    case StructureCategory::kPlanar: return "planar";
    case StructureCategory::kPlanarZigzag: return "planar-zigzag";
    case StructureCategory::kOutOfPlaneZigzag: return "out-of-plane-zigzag";
    case StructureCategory::kLinear: return "linear";
    case StructureCategory::kThreeDimensional: return "three-dimensional";
  }
  return "?";
}

std::optional<StructureCategory> parse_category(const std::string& s) {
  for (auto c : {StructureCategory::kPlanar, StructureCategory::kPlanarZigzag,
                 StructureCategory::kOutOfPlaneZigzag, StructureCategory::kLinear,
                 StructureCategory::kThreeDimensional})
    if (s == to_string(c)) return c;
  return std::nullopt;
}

void StructureThresholds::validate() const {
  if (!(eta > 0.0)) throw ConfigError("structure thresholds: eta must be positive");
  if (!(shell_gap_factor > 0.0)) throw ConfigError("structure thresholds: shell_gap_factor must be positive");
  if (!(zigzag_fraction > 0.0 && zigzag_fraction <= 1.0))
    throw ConfigError("structure thresholds: zigzag_fraction must lie in (0, 1]");
  if (!(zigzag_max_amplitude > eta))
    throw ConfigError("structure thresholds: zigzag_max_amplitude must exceed eta");
}

SpacingStats spacing_stats(const Positions& x) {
  if (x.size() < 2) throw ConfigError("spacing statistics need at least two ions");
  SpacingStats s;
  s.per_ion.assign(x.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double d = (x[i] - x[j]).norm();
      s.per_ion[i] = std::min(s.per_ion[i], d);
      s.per_ion[j] = std::min(s.per_ion[j], d);
    }
  s.min = *std::min_element(s.per_ion.begin(), s.per_ion.end());
  s.max = *std::max_element(s.per_ion.begin(), s.per_ion.end());
  double sum = 0.0;
  for (double d : s.per_ion) sum += d;
  s.mean = std::clamp(sum / double(x.size()), s.min, s.max);
  return s;
}

std::vector<std::size_t> shell_decomposition(const Positions& x, const StructureThresholds& t) {
  t.validate();
  if (x.empty()) throw ConfigError("shell decomposition of an empty crystal");
  if (x.size() == 1) return {1};
  const SpacingStats s = spacing_stats(x);
  if (max_z_deviation(x) >= t.eta * s.mean)
    throw ClassificationError("shell decomposition needs a planar crystal");

  Positions flat = x;
  for (auto& r : flat) r.z() = 0.0;
  const double gap = t.shell_gap_factor * median(spacing_stats(flat).per_ion);
  const PlaneFrame f = plane_frame(x);
  std::vector<double> radii;
  for (const auto& r : x) radii.push_back((r.head<2>() - f.centroid).norm());
  std::sort(radii.begin(), radii.end());

  std::vector<std::size_t> shells{1};
  for (std::size_t k = 1; k < radii.size(); ++k) {
    if (radii[k] - radii[k - 1] > gap)
      shells.push_back(1);
    else
      ++shells.back();
  }
  return shells;
}

StructureReport classify(const Positions& x, const StructureThresholds& t) {
  t.validate();
  if (x.empty()) throw ConfigError("cannot classify an empty crystal");
  StructureReport rep;
  const PlaneFrame f = plane_frame(x);
  rep.extent_major = f.extent_major;
  rep.extent_minor = f.extent_minor;
  rep.long_axis_angle = std::atan2(f.major.y(), f.major.x());
  if (rep.long_axis_angle < 0) rep.long_axis_angle += std::numbers::pi;
  if (rep.long_axis_angle >= std::numbers::pi) rep.long_axis_angle -= std::numbers::pi;
  rep.max_abs_z = max_z_deviation(x);
  if (x.size() == 1) return rep;

  rep.spacing = spacing_stats(x);
  const double s = rep.spacing.mean;
  rep.planar_family = rep.max_abs_z < t.eta * s;

  std::vector<double> z;
  for (const auto& r : x) z.push_back(r.z());
  const double zm = median(z);
  std::vector<std::pair<double, double>> in_plane, out_of_plane;
  for (const auto& r : x) {
    const Eigen::Vector2d d = r.head<2>() - f.centroid;
    in_plane.emplace_back(d.dot(f.major), d.dot(f.minor));
    out_of_plane.emplace_back(d.dot(f.major), r.z() - zm);
  }

  if (rep.planar_family) {
    rep.shell_occupancies = shell_decomposition(x, t);
    if (x.size() >= 3 && f.extent_minor < t.eta * s)
      rep.category = StructureCategory::kLinear;
    else if (x.size() >= 3 && is_zigzag(alternation(in_plane), s, t))
      rep.category = StructureCategory::kPlanarZigzag;
    else
      rep.category = StructureCategory::kPlanar;
    return rep;
  }

  // Principal extents in 3D decide linearity off the plane.
  Vec3 c = Vec3::Zero();
  for (const auto& r : x) c += r;
  c /= double(x.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& r : x) cov += (r - c) * (r - c).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  double e1 = 0.0, e0 = 0.0;
  for (const auto& r : x) {
    e1 = std::max(e1, std::abs((r - c).dot(es.eigenvectors().col(1))));
    e0 = std::max(e0, std::abs((r - c).dot(es.eigenvectors().col(0))));
  }
  if (e1 < t.eta * s && e0 < t.eta * s)
    rep.category = StructureCategory::kLinear;
  else if (is_zigzag(alternation(out_of_plane), s, t))
    rep.category = StructureCategory::kOutOfPlaneZigzag;
  else
    rep.category = StructureCategory::kThreeDimensional;
  return rep;
}

StructureReport classify(const CrystalState& state, const StructureThresholds& t) {
  if (!state.converged) throw ConfigError("classify: crystal state is not converged");
  return classify(state.positions, t);
}

double MicromotionMap::differential(std::size_t i, std::size_t j) const {
  if (i >= excursions.size() || j >= excursions.size())
    throw ConfigError("micromotion: ion index out of range");
  return (excursions[i] - excursions[j]).norm();
}

MicromotionMap micromotion_map(const Positions& x, double q_r, const Vec3& rf_null) {
  micromotion_amplitude(q_r, 0.0);  // stability check
  MicromotionMap m;
  m.q_r = q_r;
  m.rf_null = rf_null;
  for (const auto& r : x) {
    Vec3 d = r - rf_null;
    d.z() = 0.0;
    m.excursions.push_back(0.5 * q_r * d);
    m.amplitudes.push_back(micromotion_amplitude(q_r, d.norm()));
  }
  return m;
}

}  // namespace ringtrap
