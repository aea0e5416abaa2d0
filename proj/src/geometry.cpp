#include "ringtrap/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "ringtrap/constants.hpp"
#include "ringtrap/errors.hpp"

namespace ringtrap {
namespace {

constexpr double kDeg = constants::pi / 180.0;

// Rotates (x, y) by -quarter_turns * 90 degrees using exact coordinate swaps.
void unrotate_quarter_turns(double& x, double& y, int quarter_turns) {
  for (int q = 0; q < quarter_turns; ++q) {
    const double nx = y;
    const double ny = -x;
    x = nx;
    y = ny;
  }
}

struct SectorTest {
  double half_wedge;  // rad
  double pitch_deg;
  double r_in, r_out, half_thickness;

  // Sector k (0-based) is centered at k * pitch. Multiples of 90 degrees are
  // removed by exact swaps so the rasterized masks keep the lattice symmetries.
  bool contains(int k, double x, double y, double z) const {
    if (std::abs(z) > half_thickness) return false;
    const double r = std::sqrt(x * x + y * y);
    if (r < r_in || r > r_out) return false;
    const double center_deg = k * pitch_deg;
    const int quarters = static_cast<int>(std::floor(center_deg / 90.0 + 1e-12));
    double u = x, v = y;
    unrotate_quarter_turns(u, v, quarters);
    const double rest_deg = center_deg - 90.0 * quarters;
    if (rest_deg == 45.0) {
      const double nu = (u + v) / std::numbers::sqrt2;
      const double nv = (v - u) / std::numbers::sqrt2;
      u = nu;
      v = nv;
    } else if (rest_deg != 0.0) {
      const double c = std::cos(rest_deg * kDeg), s = std::sin(rest_deg * kDeg);
      const double nu = c * u + s * v;
      const double nv = -s * u + c * v;
      u = nu;
      v = nv;
    }
    return std::abs(std::atan2(v, u)) <= half_wedge;
  }
};

struct EndcapTest {
  double z_face, z_end, tan_bore, r_tip, tan_outer, r_max;

  bool contains(double x, double y, double z_signed) const {
    const double z = z_signed;
    if (z < z_face || z > z_end) return false;
    const double r = std::sqrt(x * x + y * y);
    if (r < z * tan_bore) return false;
    return r <= std::min(r_max, r_tip + (z - z_face) * tan_outer);
  }
};

}  // namespace

double ElectrodeGeometry::bore_half_angle() const { return std::asin(endcap_numerical_aperture); }

void ElectrodeGeometry::validate() const {
  auto fail = [](const std::string& m) { throw GeometryError("electrode geometry: " + m); };
  if (sector_count != 8) fail("sector_count must be 8");
  if (std::abs(sector_count * sector_pitch_deg - 360.0) > 1e-9)
    fail("sector_count * sector_pitch must equal 360 degrees");
  if (!(sector_wedge_angle_deg > 0.0 && sector_wedge_angle_deg < sector_pitch_deg))
    fail("sector wedge angle must be positive and smaller than the pitch");
  if (!(ring_inner_radius > 0.0 && ring_inner_radius < ring_outer_radius))
    fail("ring inner radius must be positive and below the outer radius");
  if (!(ring_thickness > 0.0)) fail("ring thickness must be positive");
  if (!(endcap_separation > 0.0)) fail("endcap separation must be positive");
  if (!(endcap_numerical_aperture > 0.0 && endcap_numerical_aperture < 1.0))
    fail("endcap numerical aperture must lie in (0, 1)");
  if (!(endcap_length > 0.0 && endcap_tip_wall > 0.0)) fail("endcap dimensions must be positive");
  if (!(endcap_outer_half_angle_deg > 0.0 && endcap_outer_half_angle_deg < 90.0))
    fail("endcap outer half angle must lie in (0, 90) degrees");
  const double r_tip = endcap_separation / 2 * std::tan(bore_half_angle()) + endcap_tip_wall;
  if (!(endcap_outer_radius > r_tip)) fail("endcap outer radius must exceed the tip radius");
  const double half_box = bounding_box / 2;
  if (!(ring_outer_radius < half_box && endcap_outer_radius < half_box &&
        endcap_separation / 2 + endcap_length < half_box))
    fail("bounding box does not enclose all electrodes");
}

Digest ElectrodeGeometry::hash() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "ringtrap-geometry-v1;%.17g;%.17g;%.17g;%.17g;%d;%.17g;%.17g;%.17g;%.17g;%.17g;"
                "%.17g;%.17g;%.17g",
                ring_inner_radius, ring_outer_radius, sector_wedge_angle_deg, sector_pitch_deg,
                sector_count, ring_thickness, endcap_separation, endcap_numerical_aperture,
                endcap_outer_radius, endcap_length, endcap_tip_wall, endcap_outer_half_angle_deg,
                bounding_box);
  return sha256(buf);
}

std::string electrode_name(NodeLabel label) {
  const auto v = static_cast<int>(label);
  if (v >= 1 && v <= 8) return "sector_" + std::to_string(v);
  switch (label) {
    case NodeLabel::kEndcapTop: return "endcap_top";
    case NodeLabel::kEndcapBottom: return "endcap_bottom";
    case NodeLabel::kGround: return "ground";
    default: return "free";
  }
}

std::optional<NodeLabel> parse_electrode(std::string_view name) {
  if (name == "endcap_top") return NodeLabel::kEndcapTop;
  if (name == "endcap_bottom") return NodeLabel::kEndcapBottom;
  if (name == "ground") return NodeLabel::kGround;
  if (name.size() == 8 && name.substr(0, 7) == "sector_" && name[7] >= '1' && name[7] <= '8')
    return static_cast<NodeLabel>(name[7] - '0');
  return std::nullopt;
}

const std::vector<std::string>& electrode_names() {
  static const std::vector<std::string> kNames = {
      "endcap_top", "endcap_bottom", "sector_1", "sector_2", "sector_3",
      "sector_4",   "sector_5",      "sector_6", "sector_7", "sector_8"};
  return kNames;
}

std::vector<NodeLabel> basis_labels(std::string_view basis_id) {
  if (basis_id == "rf") return {NodeLabel::kEndcapTop, NodeLabel::kEndcapBottom};
  if (auto l = parse_electrode(basis_id)) return {*l};
  throw ConfigError("unknown basis id '" + std::string(basis_id) + "'");
}

ElectrodeMask rasterize(const ElectrodeGeometry& geometry, double spacing, const Vec3& offset) {
  geometry.validate();
  if (!(spacing > 0.0)) throw GeometryError("rasterize: spacing must be positive");
  if (geometry.endcap_separation / spacing < 4.0 - 1e-9) {
    std::ostringstream msg;
    msg << "rasterize: spacing " << spacing << " m is too coarse; at least 4 nodes must span the "
        << geometry.endcap_separation << " m endcap gap";
    throw GeometryError(msg.str());
  }
  const auto half_nodes = static_cast<std::ptrdiff_t>(std::floor(geometry.bounding_box / 2 / spacing + 1e-9));
  const std::size_t n = static_cast<std::size_t>(2 * half_nodes + 1);

  ElectrodeMask mask;
  mask.shape.spacing = spacing;
  mask.shape.dims = {n, n, n};
  mask.shape.origin = offset - Vec3::Constant(double(half_nodes) * spacing);
  mask.labels.assign(mask.shape.size(), NodeLabel::kFree);
  mask.geometry_hash = geometry.hash();

  const SectorTest sector{geometry.sector_wedge_angle_deg / 2 * kDeg, geometry.sector_pitch_deg,
                          geometry.ring_inner_radius, geometry.ring_outer_radius,
                          geometry.ring_thickness / 2};
  const double tan_bore = std::tan(geometry.bore_half_angle());
  const double z_face = geometry.endcap_separation / 2;
  const EndcapTest endcap{z_face,
                          z_face + geometry.endcap_length,
                          tan_bore,
                          z_face * tan_bore + geometry.endcap_tip_wall,
                          std::tan(geometry.endcap_outer_half_angle_deg * kDeg),
                          geometry.endcap_outer_radius};

  // Coordinates are formed as offset + integer * spacing so that the lattice
  // is exactly symmetric about its center.
  for (std::size_t k = 0; k < n; ++k) {
    const double z = offset.z() + double(std::ptrdiff_t(k) - half_nodes) * spacing;
    for (std::size_t j = 0; j < n; ++j) {
      const double y = offset.y() + double(std::ptrdiff_t(j) - half_nodes) * spacing;
      for (std::size_t i = 0; i < n; ++i) {
        const double x = offset.x() + double(std::ptrdiff_t(i) - half_nodes) * spacing;
        const std::size_t idx = mask.shape.index(i, j, k);
        if (i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1) {
          mask.labels[idx] = NodeLabel::kGround;
          continue;
        }
        int hits = 0;
        NodeLabel label = NodeLabel::kFree;
        for (int s = 0; s < geometry.sector_count; ++s) {
          if (sector.contains(s, x, y, z)) {
            ++hits;
            label = static_cast<NodeLabel>(s + 1);
          }
        }
        if (endcap.contains(x, y, z)) {
          ++hits;
          label = NodeLabel::kEndcapTop;
        }
        if (endcap.contains(x, y, -z)) {
          ++hits;
          label = NodeLabel::kEndcapBottom;
        }
        if (hits > 1) {
          std::ostringstream msg;
          msg << "rasterize: overlapping electrodes at (" << x << ", " << y << ", " << z << ")";
          throw GeometryError(msg.str());
        }
        mask.labels[idx] = label;
      }
    }
  }
  return mask;
}

}  // namespace ringtrap
