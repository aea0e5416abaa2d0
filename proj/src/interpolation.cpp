#include "ringtrap/interpolation.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "ringtrap/errors.hpp"

namespace ringtrap {

// Per-axis order: corner c in {0, 1}, derivative order o in {0, 1, 2}, packed as 3c + o.
struct GridInterpolator::CellData {
  double d[6][6][6];  // [z][y][x], index-unit derivatives
  Vec3 frac;
};

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Value, first and second derivative (unit spacing) at v[2] from samples at
// offsets -2..2. NaN marks samples that cannot be used.
void node_data(const double* v, double* out) {
  auto ok = [&](int k) { return std::isfinite(v[k]); };
  out[0] = v[2];
  if (!ok(2)) {
    out[1] = out[2] = kNaN;
  } else if (ok(0) && ok(1) && ok(3) && ok(4)) {
    out[1] = (v[0] - 8 * v[1] + 8 * v[3] - v[4]) / 12;
    out[2] = (-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / 12;
  } else if (ok(1) && ok(3)) {
    out[1] = 0.5 * (v[3] - v[1]);
    out[2] = v[1] - 2 * v[2] + v[3];
  } else if (ok(3) && ok(4)) {
    out[1] = 0.5 * (-3 * v[2] + 4 * v[3] - v[4]);
    out[2] = v[2] - 2 * v[3] + v[4];
  } else if (ok(0) && ok(1)) {
    out[1] = 0.5 * (3 * v[2] - 4 * v[1] + v[0]);
    out[2] = v[2] - 2 * v[1] + v[0];
  } else {
    out[1] = out[2] = kNaN;
  }
}

// Quintic Hermite basis on [0, 1]: value, first and second derivative at each
// end. Coefficients in ascending powers of t.
constexpr double kHermite[6][6] = {
    {1, 0, 0, -10, 15, -6},       // f(0)
    {0, 1, 0, -6, 8, -3},         // f'(0)
    {0, 0, 0.5, -1.5, 1.5, -0.5},  // f''(0)
    {0, 0, 0, 10, -15, 6},        // f(1)
    {0, 0, 0, -4, 7, -3},         // f'(1)
    {0, 0, 0, 0.5, -1, 0.5},      // f''(1)
};

struct Basis {
  double w[6], d1[6], d2[6];
};

Basis hermite(double t) {
  Basis b;
  for (int m = 0; m < 6; ++m) {
    const double* c = kHermite[m];
    b.w[m] = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
    b.d1[m] = c[1] + t * (2 * c[2] + t * (3 * c[3] + t * (4 * c[4] + t * 5 * c[5])));
    b.d2[m] = 2 * c[2] + t * (6 * c[3] + t * (12 * c[4] + t * 20 * c[5]));
  }
  return b;
}

}  // namespace

GridInterpolator::GridInterpolator(std::shared_ptr<const ScalarFieldGrid> grid)
    : grid_(std::move(grid)) {
  if (!grid_) throw ConfigError("GridInterpolator: null grid");
  for (auto d : grid_->shape.dims)
    if (d < 3) throw ConfigError("GridInterpolator: grid needs >= 3 nodes per axis");
}

bool GridInterpolator::gather(const Vec3& r, CellData& out) const {
  const GridShape& s = grid_->shape;
  std::ptrdiff_t cell[3];
  for (int a = 0; a < 3; ++a) {
    const double t = (r[a] - s.origin[a]) / s.spacing;
    if (!std::isfinite(t)) return false;
    double c = std::floor(t);
    if (t == double(s.dims[a] - 1)) c -= 1;  // upper face belongs to the last cell
    if (c < 0.0 || c + 1.0 > double(s.dims[a] - 1)) return false;
    cell[a] = static_cast<std::ptrdiff_t>(c);
    out.frac[a] = t - c;
  }

  // Samples at offsets -2..3 from the cell's lower corner; NaN off-grid or on electrodes.
  double v[6][6][6];
  for (int k = 0; k < 6; ++k)
    for (int j = 0; j < 6; ++j)
      for (int i = 0; i < 6; ++i) {
        const std::ptrdiff_t n[3] = {cell[0] + i - 2, cell[1] + j - 2, cell[2] + k - 2};
        bool inside = true;
        for (int a = 0; a < 3; ++a) inside = inside && n[a] >= 0 && n[a] < std::ptrdiff_t(s.dims[a]);
        if (!inside) {
          v[k][j][i] = kNaN;
          continue;
        }
        const auto idx = s.index(std::size_t(n[0]), std::size_t(n[1]), std::size_t(n[2]));
        v[k][j][i] = grid_->is_free(idx) ? grid_->values[idx] : kNaN;
      }

  // Sequential 1D passes: x, then y on the x-results, then z.
  double x[6][6][6];  // [z][y][3cx + ox]
  for (int k = 0; k < 6; ++k)
    for (int j = 0; j < 6; ++j)
      for (int c = 0; c < 2; ++c) node_data(&v[k][j][c], &x[k][j][3 * c]);

  double y[6][6][6];  // [z][3cy + oy][3cx + ox]
  for (int k = 0; k < 6; ++k)
    for (int m = 0; m < 6; ++m)
      for (int c = 0; c < 2; ++c) {
        double line[5], res[3];
        for (int q = 0; q < 5; ++q) line[q] = x[k][c + q][m];
        node_data(line, res);
        for (int o = 0; o < 3; ++o) y[k][3 * c + o][m] = res[o];
      }

  for (int l = 0; l < 6; ++l)
    for (int m = 0; m < 6; ++m)
      for (int c = 0; c < 2; ++c) {
        double line[5], res[3];
        for (int q = 0; q < 5; ++q) line[q] = y[c + q][l][m];
        node_data(line, res);
        for (int o = 0; o < 3; ++o) out.d[3 * c + o][l][m] = res[o];
      }

  for (const auto& plane : out.d)
    for (const auto& row : plane)
      for (double d : row)
        if (!std::isfinite(d)) return false;
  return true;
}

bool GridInterpolator::contains(const Vec3& r) const {
  CellData d;
  return gather(r, d);
}

GridInterpolator::Sample GridInterpolator::evaluate(const Vec3& r) const {
  CellData cd;
  if (!gather(r, cd)) {
    std::ostringstream msg;
    msg << "point (" << r.x() << ", " << r.y() << ", " << r.z()
        << ") m is outside the interpolation domain";
    throw DomainError(msg.str());
  }
  const Basis bx = hermite(cd.frac[0]), by = hermite(cd.frac[1]), bz = hermite(cd.frac[2]);

  double v = 0, gx = 0, gy = 0, gz = 0, hxx = 0, hyy = 0, hzz = 0, hxy = 0, hxz = 0, hyz = 0;
  for (int c = 0; c < 6; ++c) {
    double p0 = 0, px = 0, pxx = 0, py = 0, pxy = 0, pyy = 0;
    for (int b = 0; b < 6; ++b) {
      const double* row = cd.d[c][b];
      double r0 = 0, r1 = 0, r2 = 0;
      for (int a = 0; a < 6; ++a) {
        r0 += bx.w[a] * row[a];
        r1 += bx.d1[a] * row[a];
        r2 += bx.d2[a] * row[a];
      }
      p0 += by.w[b] * r0;
      px += by.w[b] * r1;
      pxx += by.w[b] * r2;
      py += by.d1[b] * r0;
      pxy += by.d1[b] * r1;
      pyy += by.d2[b] * r0;
    }
    v += bz.w[c] * p0;
    gx += bz.w[c] * px;
    gy += bz.w[c] * py;
    gz += bz.d1[c] * p0;
    hxx += bz.w[c] * pxx;
    hyy += bz.w[c] * pyy;
    hzz += bz.d2[c] * p0;
    hxy += bz.w[c] * pxy;
    hxz += bz.d1[c] * px;
    hyz += bz.d1[c] * py;
  }
  const double ih = 1.0 / grid_->shape.spacing, ih2 = ih * ih;
  Sample out;
  out.value = v;
  out.gradient = Vec3(gx, gy, gz) * ih;
  out.hessian << hxx, hxy, hxz, hxy, hyy, hyz, hxz, hyz, hzz;
  out.hessian *= ih2;
  return out;
}

double GridInterpolator::value(const Vec3& r) const { return evaluate(r).value; }

}  // namespace ringtrap
