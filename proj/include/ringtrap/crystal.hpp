#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "ringtrap/physics.hpp"
#include "ringtrap/potential.hpp"

namespace ringtrap {

using Positions = std::vector<Vec3>;

struct SolverOptions {
  std::size_t restarts = 24;
  std::size_t max_iterations = 50000;
  /// Convergence bound on the largest per-ion force, relative to q^2 / (4 pi eps0 l^2).
  double force_tolerance = 1e-9;
  /// Random starts fill an ellipsoid of semi-axes init_radius_scale * l * N^(1/3) * (w_r / w_i).
  double init_radius_scale = 1.5;
  std::uint64_t rng_seed = 0;
  /// Worker budget for parallel restarts (0 = runtime default). Results do not depend on it.
  int threads = 0;

  void validate(bool allow_zero_restarts = false) const;
};

struct CrystalState {
  Positions positions;
  double total_energy = 0.0;        // J
  double max_residual_force = 0.0;  // N
  std::size_t n_ions = 0;
  std::uint64_t seed = 0;
  std::size_t restarts_used = 0;
  std::size_t best_start = 0;  // index of the winning start
  bool converged = false;
};

/// Sum of single-ion energies plus q^2 / (4 pi eps0 r_ij) over pairs. Terms are
/// summed in sorted order, so relabeling ions gives a bit-identical result.
/// Throws ConfigError for coincident ions (closer than 1e-9 m), DomainError
/// outside the model.
double total_energy(const Positions& positions, const PotentialModel& model,
                    const IonSpecies& species);

/// Gradient of `total_energy`, one 3-vector per ion (J/m).
Positions total_gradient(const Positions& positions, const PotentialModel& model,
                         const IonSpecies& species);

/// 3N x 3N Hessian of the total energy (J/m^2), ion-major ordering.
Eigen::MatrixXd crystal_hessian(const Positions& positions, const PotentialModel& model,
                                const IonSpecies& species);

/// l with l^3 = q^2 / (4 pi eps0 m omega_r^2).
double characteristic_length(const IonSpecies& species, double omega_r);

/// Lowest-energy converged equilibrium over `options.restarts` random starts
/// (plus any explicit `starts`, which run first). Deterministic for fixed seed
/// and options regardless of thread count. Throws ConvergenceError when no
/// start converges.
CrystalState find_equilibrium(const PotentialModel& model, const IonSpecies& species,
                              std::size_t n_ions, const SolverOptions& options,
                              const std::vector<Positions>& starts = {});

/// One local minimization, exposed for tests and diagnostics.
struct LocalMinimization {
  Positions positions;
  double energy = 0.0;
  double max_force = 0.0;  // N
  bool converged = false;
  std::size_t iterations = 0;
  std::vector<double> energy_trace;  // accepted energies, when requested
};

LocalMinimization minimize_from(const PotentialModel& model, const IonSpecies& species,
                                const Positions& start, const SolverOptions& options,
                                double length_scale, bool record_trace = false);

struct ModeSpectrum {
  /// Eigenvalues of the mass-weighted Hessian, ascending (rad^2/s^2).
  Eigen::VectorXd omega_squared;
  /// sqrt(|omega^2|), negated for unstable (omega^2 < 0) modes.
  Eigen::VectorXd frequencies;
  Eigen::MatrixXd eigenvectors;  // columns, orthonormal
  double reference_omega = 0.0;  // w_r used for the zero-mode threshold

  /// |omega^2| < 1e-8 w_r^2.
  bool is_zero_mode(Eigen::Index i) const;
  std::size_t zero_mode_count() const;
  std::size_t unstable_mode_count() const;
};

/// Normal modes about a converged state. Throws ConfigError for unconverged states.
ModeSpectrum normal_modes(const CrystalState& state, const PotentialModel& model,
                          const IonSpecies& species);

}  // namespace ringtrap
