#include "ringtrap/laplace.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <omp.h>

#include "ringtrap/constants.hpp"
#include "ringtrap/errors.hpp"

namespace ringtrap {
namespace {

static_assert(std::endian::native == std::endian::little,
              "basis cache I/O assumes a little-endian host");

int resolve_threads(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

// One red-black half sweep over interior free nodes of the given color
// ((i + j + k) % 2). Nodes of one color only read the other color, so the
// result is independent of how the k-planes are split across workers.
void sor_half_sweep(const GridShape& s, const std::vector<NodeLabel>& labels,
                    std::vector<double>& u, int color, double omega, int threads) {
  const auto nx = static_cast<std::ptrdiff_t>(s.dims[0]);
  const auto ny = static_cast<std::ptrdiff_t>(s.dims[1]);
  const auto nz = static_cast<std::ptrdiff_t>(s.dims[2]);
  const std::ptrdiff_t sy = nx, sz = nx * ny;
  double* v = u.data();
  const NodeLabel* lab = labels.data();
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::ptrdiff_t k = 1; k < nz - 1; ++k) {
    for (std::ptrdiff_t j = 1; j < ny - 1; ++j) {
      const std::ptrdiff_t row = j * sy + k * sz;
      for (std::ptrdiff_t i = 1 + ((j + k + 1 + color) & 1); i < nx - 1; i += 2) {
        const std::ptrdiff_t idx = row + i;
        if (lab[idx] != NodeLabel::kFree) continue;
        const double avg =
            (v[idx - 1] + v[idx + 1] + v[idx - sy] + v[idx + sy] + v[idx - sz] + v[idx + sz]) /
            6.0;
        v[idx] += omega * (avg - v[idx]);
      }
    }
  }
}

double residual_impl(const GridShape& s, const NodeLabel* lab, const double* v, int threads) {
  const auto nx = static_cast<std::ptrdiff_t>(s.dims[0]);
  const auto ny = static_cast<std::ptrdiff_t>(s.dims[1]);
  const auto nz = static_cast<std::ptrdiff_t>(s.dims[2]);
  const std::ptrdiff_t sy = nx, sz = nx * ny;
  double worst = 0.0;
#pragma omp parallel for schedule(static) num_threads(threads) reduction(max : worst)
  for (std::ptrdiff_t k = 1; k < nz - 1; ++k) {
    for (std::ptrdiff_t j = 1; j < ny - 1; ++j) {
      for (std::ptrdiff_t i = 1; i < nx - 1; ++i) {
        const std::ptrdiff_t idx = i + j * sy + k * sz;
        if (lab && lab[idx] != NodeLabel::kFree) continue;
        const double avg =
            (v[idx - 1] + v[idx + 1] + v[idx - sy] + v[idx + sy] + v[idx - sz] + v[idx + sz]) /
            6.0;
        worst = std::max(worst, std::abs(avg - v[idx]));
      }
    }
  }
  return worst;
}

std::string format_tolerance(double tol) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", tol);
  return buf;
}

}  // namespace

double laplace_residual(const ScalarFieldGrid& grid, int threads) {
  return residual_impl(grid.shape, grid.mask ? grid.mask->labels.data() : nullptr,
                       grid.values.data(), resolve_threads(threads));
}

ScalarFieldGrid solve_dirichlet(std::shared_ptr<const ElectrodeMask> mask,
                                const std::function<double(NodeLabel)>& boundary_voltage,
                                const LaplaceOptions& options) {
  if (!mask) throw ConfigError("solve_basis: mask is required");
  if (!(options.tolerance > 0.0 && options.tolerance <= 1e-3))
    throw ConfigError("solve_basis: tolerance must lie in (0, 1e-3]");
  const GridShape& s = mask->shape;
  for (auto d : s.dims)
    if (d < 3) throw ConfigError("solve_basis: grid must have at least 3 nodes per axis");

  ScalarFieldGrid g;
  g.shape = s;
  g.mask = mask;
  g.values.assign(s.size(), 0.0);
  std::array<double, 256> table{};
  for (int l = 1; l < 256; ++l) table[l] = boundary_voltage(static_cast<NodeLabel>(l));
  for (std::size_t idx = 0; idx < s.size(); ++idx) {
    const auto l = static_cast<std::uint8_t>(mask->labels[idx]);
    if (l != 0) g.values[idx] = table[l];
  }

  const int threads = resolve_threads(options.threads);
  const std::size_t n_max = *std::max_element(s.dims.begin(), s.dims.end());
  const double omega = options.omega > 0.0
                           ? options.omega
                           : 2.0 / (1.0 + std::sin(constants::pi / double(n_max - 1)));
  const std::size_t interval = std::max<std::size_t>(1, options.check_interval);

  double residual = residual_impl(s, mask->labels.data(), g.values.data(), threads);
  std::size_t it = 0;
  while (residual >= options.tolerance) {
    if (it >= options.max_iterations) {
      std::ostringstream msg;
      msg << "Laplace solve did not converge in " << options.max_iterations
          << " sweeps (residual " << residual << " V, tolerance " << options.tolerance << ")";
      throw ConvergenceError(msg.str(), residual);
    }
    for (std::size_t n = 0; n < interval && it < options.max_iterations; ++n, ++it) {
      sor_half_sweep(s, mask->labels, g.values, 0, omega, threads);
      sor_half_sweep(s, mask->labels, g.values, 1, omega, threads);
    }
    residual = residual_impl(s, mask->labels.data(), g.values.data(), threads);
  }
  g.achieved_residual = residual;
  return g;
}

ScalarFieldGrid solve_basis(std::shared_ptr<const ElectrodeMask> mask, std::string_view basis_id,
                            const LaplaceOptions& options) {
  const auto hot = basis_labels(basis_id);
  return solve_dirichlet(
      std::move(mask),
      [&hot](NodeLabel l) {
        return std::find(hot.begin(), hot.end(), l) != hot.end() ? 1.0 : 0.0;
      },
      options);
}

// ---------------------------------------------------------------------------
// Cache file I/O

void write_grid_file(const std::filesystem::path& path, const ScalarFieldGrid& grid) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write("SFG1", 4);
    for (auto d : grid.shape.dims) {
      const auto v = static_cast<std::uint32_t>(d);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    for (int a = 0; a < 3; ++a) {
      const double o = grid.shape.origin[a];
      out.write(reinterpret_cast<const char*>(&o), sizeof o);
    }
    out.write(reinterpret_cast<const char*>(&grid.shape.spacing), sizeof(double));
    const Digest& h = grid.geometry_hash();
    out.write(reinterpret_cast<const char*>(h.data()), std::streamsize(h.size()));
    out.write(reinterpret_cast<const char*>(&grid.achieved_residual), sizeof(double));
    out.write(reinterpret_cast<const char*>(grid.values.data()),
              std::streamsize(grid.values.size() * sizeof(double)));
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move cache file into place: " + ec.message());
}

ScalarFieldGrid read_grid_file(const std::filesystem::path& path, Digest* hash_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "SFG1", 4) != 0)
    throw IoError("'" + path.string() + "' is not an SFG1 grid file");
  ScalarFieldGrid g;
  for (auto& d : g.shape.dims) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    d = v;
  }
  for (int a = 0; a < 3; ++a) in.read(reinterpret_cast<char*>(&g.shape.origin[a]), sizeof(double));
  in.read(reinterpret_cast<char*>(&g.shape.spacing), sizeof(double));
  Digest h{};
  in.read(reinterpret_cast<char*>(h.data()), std::streamsize(h.size()));
  in.read(reinterpret_cast<char*>(&g.achieved_residual), sizeof(double));
  if (!in) throw IoError("truncated header in '" + path.string() + "'");
  g.values.resize(g.shape.size());
  in.read(reinterpret_cast<char*>(g.values.data()),
          std::streamsize(g.values.size() * sizeof(double)));
  if (!in) throw IoError("truncated payload in '" + path.string() + "'");
  if (hash_out) *hash_out = h;
  return g;
}

std::filesystem::path BasisCache::path_for(const ElectrodeMask& mask, std::string_view basis_id,
                                           double tolerance) const {
  char spacing[32];
  std::snprintf(spacing, sizeof spacing, "%.6e", mask.shape.spacing);
  return dir_ / (std::string(basis_id) + "_" + to_hex(mask.geometry_hash).substr(0, 16) + "_h" +
                 spacing + "_tol" + format_tolerance(tolerance) + ".sfg");
}

std::optional<ScalarFieldGrid> BasisCache::load(std::shared_ptr<const ElectrodeMask> mask,
                                                std::string_view basis_id,
                                                double tolerance) const {
  const auto path = path_for(*mask, basis_id, tolerance);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  Digest hash{};
  ScalarFieldGrid g;
  try {
    g = read_grid_file(path, &hash);
  } catch (const IoError&) {
    return std::nullopt;
  }
  if (hash != mask->geometry_hash || !g.shape.same_lattice(mask->shape) ||
      !(g.achieved_residual < tolerance)) {
    return std::nullopt;
  }
  // Boundary values must match the labels exactly; anything else is a stale file.
  const auto hot = basis_labels(basis_id);
  for (std::size_t idx = 0; idx < g.values.size(); ++idx) {
    const NodeLabel l = mask->labels[idx];
    if (l == NodeLabel::kFree) continue;
    const double want = std::find(hot.begin(), hot.end(), l) != hot.end() ? 1.0 : 0.0;
    if (g.values[idx] != want) return std::nullopt;
  }
  g.mask = std::move(mask);
  return g;
}

void BasisCache::store(const ScalarFieldGrid& grid, std::string_view basis_id,
                       double tolerance) const {
  if (!grid.mask) throw IoError("cannot cache a grid without its electrode mask");
  write_grid_file(path_for(*grid.mask, basis_id, tolerance), grid);
}

// ---------------------------------------------------------------------------

const ScalarFieldGrid& BasisSet::at(std::string_view id) const {
  auto it = grids.find(std::string(id));
  if (it == grids.end() || !it->second)
    throw ConfigError("basis set has no solved grid for '" + std::string(id) + "'");
  return *it->second;
}

ScalarFieldGrid obtain_basis(std::shared_ptr<const ElectrodeMask> mask, std::string_view basis_id,
                             const LaplaceOptions& options, const BasisCache* cache,
                             BasisOrigin* origin) {
  if (cache) {
    if (auto hit = cache->load(mask, basis_id, options.tolerance)) {
      if (origin) *origin = {std::string(basis_id), true, hit->achieved_residual};
      return std::move(*hit);
    }
  }
  ScalarFieldGrid g = solve_basis(mask, basis_id, options);
  if (cache) cache->store(g, basis_id, options.tolerance);
  if (origin) *origin = {std::string(basis_id), false, g.achieved_residual};
  return g;
}

BasisSet solve_basis_set(std::shared_ptr<const ElectrodeMask> mask, const LaplaceOptions& options,
                         const BasisCache* cache, std::vector<BasisOrigin>* origins) {
  BasisSet set;
  set.mask = mask;
  set.tolerance = options.tolerance;
  std::vector<std::string> ids{"rf"};
  for (const auto& n : electrode_names()) ids.push_back(n);
  for (const auto& id : ids) {
    BasisOrigin o;
    auto g = std::make_shared<ScalarFieldGrid>(obtain_basis(mask, id, options, cache, &o));
    set.worst_residual = std::max(set.worst_residual, g->achieved_residual);
    set.grids.emplace(id, std::move(g));
    if (origins) origins->push_back(o);
  }
  return set;
}

}  // namespace ringtrap
