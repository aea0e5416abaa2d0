#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "ringtrap/geometry.hpp"
#include "ringtrap/grid.hpp"

namespace ringtrap {

struct LaplaceOptions {
  /// Max-norm of the 7-point residual, (sum of neighbours) / 6 - u, in units of 1 V.
  double tolerance = 1e-6;
  std::size_t max_iterations = 100000;
  /// Over-relaxation factor; 0 selects 2 / (1 + sin(pi / (n - 1))) from the largest dimension.
  double omega = 0.0;
  /// Residual is evaluated every this many red-black sweeps.
  std::size_t check_interval = 10;
  /// Worker budget (0 = runtime default). Results do not depend on it.
  int threads = 0;
};

/// Max-norm of the discrete Laplace residual over free nodes.
double laplace_residual(const ScalarFieldGrid& grid, int threads = 0);

/// Red-black SOR solve of the Laplace problem with the labels of `basis_id`
/// ("rf", "ground", or an electrode name) held at 1 V and every other Dirichlet
/// node at 0 V. Throws ConvergenceError carrying the final residual when
/// max_iterations is exhausted.
ScalarFieldGrid solve_basis(std::shared_ptr<const ElectrodeMask> mask, std::string_view basis_id,
                            const LaplaceOptions& options = {});

/// Solves an arbitrary Dirichlet problem: every non-free node takes
/// `boundary_voltage(label)`.
ScalarFieldGrid solve_dirichlet(std::shared_ptr<const ElectrodeMask> mask,
                                const std::function<double(NodeLabel)>& boundary_voltage,
                                const LaplaceOptions& options = {});

/// Binary basis cache, one file per (geometry hash, spacing, basis id, tolerance).
///
/// File layout (little-endian): "SFG1", dims 3 x u32, origin 3 x f64,
/// spacing f64, geometry hash 32 bytes, achieved residual f64, then the f64
/// node values in x-fastest order.
class BasisCache {
 public:
  explicit BasisCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::filesystem::path path_for(const ElectrodeMask& mask, std::string_view basis_id,
                                 double tolerance) const;

  /// Returns the cached grid only if the header matches the mask's lattice and
  /// geometry hash and the stored residual meets the tolerance.
  std::optional<ScalarFieldGrid> load(std::shared_ptr<const ElectrodeMask> mask,
                                      std::string_view basis_id, double tolerance) const;
  void store(const ScalarFieldGrid& grid, std::string_view basis_id, double tolerance) const;

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

void write_grid_file(const std::filesystem::path& path, const ScalarFieldGrid& grid);
/// Reads header + payload. The mask is not stored and is left empty.
ScalarFieldGrid read_grid_file(const std::filesystem::path& path, Digest* hash_out = nullptr);

/// Unit-voltage basis grids for the 10 electrodes plus the combined RF basis,
/// all on one lattice.
struct BasisSet {
  std::shared_ptr<const ElectrodeMask> mask;
  std::map<std::string, std::shared_ptr<const ScalarFieldGrid>> grids;
  double tolerance = 0.0;
  double worst_residual = 0.0;

  const ScalarFieldGrid& at(std::string_view id) const;
  const ScalarFieldGrid& rf() const { return at("rf"); }
};

/// Per-basis bookkeeping reported by `obtain_basis`.
struct BasisOrigin {
  std::string id;
  bool cache_hit = false;
  double residual = 0.0;
};

/// Loads `basis_id` from the cache when valid, otherwise solves (and stores it).
ScalarFieldGrid obtain_basis(std::shared_ptr<const ElectrodeMask> mask, std::string_view basis_id,
                             const LaplaceOptions& options, const BasisCache* cache,
                             BasisOrigin* origin = nullptr);

/// Solves (or loads) "rf" and all 10 electrode bases.
BasisSet solve_basis_set(std::shared_ptr<const ElectrodeMask> mask, const LaplaceOptions& options,
                         const BasisCache* cache = nullptr,
                         std::vector<BasisOrigin>* origins = nullptr);

}  // namespace ringtrap
