#include "ringtrap/pseudopotential.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "ringtrap/errors.hpp"
#include "ringtrap/interpolation.hpp"

namespace ringtrap {
namespace {

bool free_at(const ScalarFieldGrid& g, const std::array<std::size_t, 3>& c, int axis,
             std::ptrdiff_t step, std::size_t& out) {
  const auto pos = static_cast<std::ptrdiff_t>(c[axis]) + step;
  if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(g.shape.dims[axis])) return false;
  auto cc = c;
  cc[axis] = static_cast<std::size_t>(pos);
  out = g.shape.index(cc[0], cc[1], cc[2]);
  return g.is_free(out);
}

}  // namespace

Vec3 node_gradient(const ScalarFieldGrid& g, std::size_t idx) {
  const auto c = g.shape.coords(idx);
  const double h = g.shape.spacing;
  const double u0 = g.values[idx];
  Vec3 grad = Vec3::Zero();
  for (int a = 0; a < 3; ++a) {
    std::size_t p = 0, m = 0, p2 = 0, m2 = 0;
    const bool fp = free_at(g, c, a, +1, p), fm = free_at(g, c, a, -1, m);
    if (fp && fm) {
      grad[a] = (g.values[p] - g.values[m]) / (2 * h);
    } else if (fp && free_at(g, c, a, +2, p2)) {
      grad[a] = (-3 * u0 + 4 * g.values[p] - g.values[p2]) / (2 * h);
    } else if (fm && free_at(g, c, a, -2, m2)) {
      grad[a] = (3 * u0 - 4 * g.values[m] + g.values[m2]) / (2 * h);
    } else if (fp) {
      grad[a] = (g.values[p] - u0) / h;
    } else if (fm) {
      grad[a] = (u0 - g.values[m]) / h;
    }
  }
  return grad;
}

ScalarFieldGrid pseudopotential_grid(const ScalarFieldGrid& rf_basis, const DriveParameters& drive,
                                     const IonSpecies& species) {
  drive.validate();
  species.validate();
  if (rf_basis.values.size() != rf_basis.shape.size())
    throw ConfigError("pseudopotential_grid: RF basis is not solved");
  const double omega = drive.rf_angular_frequency;
  const double pref = species.charge * species.charge * drive.rf_amplitude * drive.rf_amplitude /
                      (4.0 * species.mass * omega * omega);
  ScalarFieldGrid out;
  out.shape = rf_basis.shape;
  out.mask = rf_basis.mask;
  out.achieved_residual = rf_basis.achieved_residual;
  out.values.assign(rf_basis.values.size(), 0.0);
  const auto n = static_cast<std::ptrdiff_t>(out.values.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t idx = 0; idx < n; ++idx) {
    if (!rf_basis.is_free(std::size_t(idx))) continue;
    out.values[std::size_t(idx)] = pref * node_gradient(rf_basis, std::size_t(idx)).squaredNorm();
  }
  return out;
}

Vec3 curvatures_at_node(const ScalarFieldGrid& g, const std::array<std::size_t, 3>& node) {
  const double h = g.shape.spacing;
  Vec3 c;
  for (int a = 0; a < 3; ++a) {
    double f[5];
    for (int s = -2; s <= 2; ++s) {
      std::size_t idx = 0;
      if (!free_at(g, node, a, s, idx)) {
        throw DomainError("curvature stencil leaves the free region");
      }
      f[s + 2] = g.values[idx];
    }
    c[a] = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h);
  }
  return c;
}

CenterCurvatures curvatures_at_center(const ScalarFieldGrid& g) {
  const GridShape& s = g.shape;
  std::array<std::size_t, 3> node{s.dims[0] / 2, s.dims[1] / 2, s.dims[2] / 2};
  auto stencil_ok = [&](const std::array<std::size_t, 3>& c) {
    for (int a = 0; a < 3; ++a)
      for (int st = -2; st <= 2; ++st) {
        std::size_t idx = 0;
        if (!free_at(g, c, a, st, idx)) return false;
      }
    return true;
  };
  if (!stencil_ok(node)) throw DomainError("grid center is not inside the free region");

  // Discrete descent over the 26-neighbourhood.
  for (std::size_t guard = 0; guard < s.size(); ++guard) {
    auto best = node;
    double best_v = g.values[s.index(node[0], node[1], node[2])];
    for (int dk = -1; dk <= 1; ++dk)
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const std::array<std::ptrdiff_t, 3> c{std::ptrdiff_t(node[0]) + di,
                                                std::ptrdiff_t(node[1]) + dj,
                                                std::ptrdiff_t(node[2]) + dk};
          bool inside = true;
          for (int a = 0; a < 3; ++a)
            inside = inside && c[a] >= 0 && c[a] < std::ptrdiff_t(s.dims[a]);
          if (!inside) continue;
          const std::size_t idx = s.index(std::size_t(c[0]), std::size_t(c[1]), std::size_t(c[2]));
          if (!g.is_free(idx)) continue;
          if (g.values[idx] < best_v) {
            best_v = g.values[idx];
            best = {std::size_t(c[0]), std::size_t(c[1]), std::size_t(c[2])};
          }
        }
    if (best == node) break;
    node = best;
    if (!stencil_ok(node))
      throw DomainError("potential minimum search reached the edge of the free region");
  }
  CenterCurvatures out;
  out.node = node;
  out.position = s.position(node[0], node[1], node[2]);
  out.curvature = curvatures_at_node(g, node);
  return out;
}

double aspect_ratio(const Vec3& c) {
  if (!(c.x() > 0 && c.y() > 0 && c.z() > 0)) {
    std::ostringstream msg;
    msg << "negative curvature at the trap center (" << c.x() << ", " << c.y() << ", " << c.z()
        << "): saddle point, check geometry or grid";
    throw NonConfiningError(msg.str());
  }
  return std::sqrt(c.z() / (0.5 * (c.x() + c.y())));
}

double aspect_ratio_rf(const ScalarFieldGrid& pseudopotential) {
  return aspect_ratio(curvatures_at_center(pseudopotential).curvature);
}

SymmetryCheck check_symmetry(const ScalarFieldGrid& g, double radius) {
  const GridShape& s = g.shape;
  if (s.dims[0] != s.dims[1] || s.dims[0] % 2 == 0 || s.dims[2] % 2 == 0)
    throw ConfigError("check_symmetry: needs an odd, square lattice centered on a node");
  const auto cx = std::ptrdiff_t(s.dims[0] / 2), cz = std::ptrdiff_t(s.dims[2] / 2);
  SymmetryCheck out;
  double max_mirror = 0, max_rot = 0, scale = 0;
  for (std::size_t k = 0; k < s.dims[2]; ++k)
    for (std::size_t j = 0; j < s.dims[1]; ++j)
      for (std::size_t i = 0; i < s.dims[0]; ++i) {
        const std::size_t idx = s.index(i, j, k);
        if (!g.is_free(idx)) continue;
        const double v = g.values[idx];
        const std::size_t mz = s.index(i, j, std::size_t(2 * cz - std::ptrdiff_t(k)));
        // (x, y) -> (-y, x): node (i, j) -> (2c - j, i)
        const std::size_t r90 = s.index(std::size_t(2 * cx - std::ptrdiff_t(j)), i, k);
        if (g.is_free(mz)) {
          max_mirror = std::max(max_mirror, std::abs(v - g.values[mz]));
          scale = std::max(scale, std::abs(v));
        }
        if (g.is_free(r90)) {
          max_rot = std::max(max_rot, std::abs(v - g.values[r90]));
          scale = std::max(scale, std::abs(v));
        }
      }

  // 45-degree rotation does not map lattice nodes onto nodes; compare through
  // the interpolant at points within `radius` of the center, on a sub-lattice
  // so small radii still get samples.
  auto shared = std::shared_ptr<const ScalarFieldGrid>(&g, [](const ScalarFieldGrid*) {});
  GridInterpolator interp(shared);
  const Vec3 center = s.position(std::size_t(cx), std::size_t(cx), std::size_t(cz));
  const double c45 = std::numbers::sqrt2 / 2;
  double max45 = 0, scale45 = 0;
  const double step = std::min(s.spacing, radius / 5);
  const auto reach = std::ptrdiff_t(std::floor(radius / step));
  for (std::ptrdiff_t dk = -reach; dk <= reach; ++dk)
    for (std::ptrdiff_t dj = -reach; dj <= reach; ++dj)
      for (std::ptrdiff_t di = -reach; di <= reach; ++di) {
        const Vec3 d = step * Vec3(double(di), double(dj), double(dk));
        if (d.norm() > radius) continue;
        const Vec3 p = center + d;
        const Vec3 q = center + Vec3(c45 * d.x() - c45 * d.y(), c45 * d.x() + c45 * d.y(), d.z());
        if (!interp.contains(p) || !interp.contains(q)) continue;
        const double a = interp.value(p), b = interp.value(q);
        max45 = std::max(max45, std::abs(a - b));
        scale45 = std::max(scale45, std::abs(a));
      }
  out.scale = scale;
  out.mirror_z = scale > 0 ? max_mirror / scale : 0.0;
  out.rotate_90 = scale > 0 ? max_rot / scale : 0.0;
  out.rotate_45 = scale45 > 0 ? max45 / scale45 : 0.0;
  return out;
}

RfAnalysis analyze_rf(const ScalarFieldGrid& rf_basis, const ScalarFieldGrid& pseudo,
                      const DriveParameters& drive, const IonSpecies& species) {
  RfAnalysis out;
  out.pseudo = curvatures_at_center(pseudo);
  out.alpha = aspect_ratio(out.pseudo.curvature);
  out.rf_curvature = curvatures_at_node(rf_basis, out.pseudo.node);
  for (int a = 0; a < 3; ++a) {
    out.q[a] = mathieu_q(out.rf_curvature[a], drive, species);
    out.pseudo_frequency[a] = pseudo_secular_frequency(out.q[a], drive);
    out.curvature_frequency[a] = std::sqrt(std::max(0.0, out.pseudo.curvature[a]) / species.mass);
  }
  out.q_r = 0.5 * (std::abs(out.q.x()) + std::abs(out.q.y()));
  return out;
}

}  // namespace ringtrap
