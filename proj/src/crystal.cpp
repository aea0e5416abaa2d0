#include "ringtrap/crystal.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <omp.h>

#include "ringtrap/errors.hpp"
#include "ringtrap/random.hpp"

namespace ringtrap {
namespace {

constexpr double kMinSeparation = 1e-9;  // m
constexpr std::uint32_t kInitTag = 0x1417;

// Energy, in units of E0 = k q^2 / l, and gradient in units of E0 / l, for
// positions given in units of l. Returns +inf for invalid configurations so
// line searches simply back off.
struct ScaledProblem {
  const PotentialModel& model;
  double length;       // l, m
  double energy_unit;  // E0, J

  double evaluate(const Eigen::VectorXd& s, Eigen::VectorXd& grad) const {
    const Eigen::Index n = s.size() / 3;
    grad.setZero(s.size());
    const double inv_e0 = 1.0 / energy_unit;
    const double force_unit = energy_unit / length;
    double e = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec3 x = s.segment<3>(3 * i) * length;
      if (!model.contains(x)) return std::numeric_limits<double>::infinity();
      const auto smp = model.evaluate(x);
      e += smp.energy * inv_e0;
      grad.segment<3>(3 * i) += smp.gradient / force_unit;
    }
    // Pair terms in these units are 1 / r.
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const Vec3 d = s.segment<3>(3 * i) - s.segment<3>(3 * j);
        const double r = d.norm();
        if (r * length < kMinSeparation) return std::numeric_limits<double>::infinity();
        e += 1.0 / r;
        const Vec3 f = d / (r * r * r);
        grad.segment<3>(3 * i) -= f;
        grad.segment<3>(3 * j) += f;
      }
    }
    return e;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& s) const {
    const Eigen::Index n = s.size() / 3;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(s.size(), s.size());
    const double scale = length * length / energy_unit;
    for (Eigen::Index i = 0; i < n; ++i)
      h.block<3, 3>(3 * i, 3 * i) = model.hessian(Vec3(s.segment<3>(3 * i) * length)) * scale;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const Vec3 d = s.segment<3>(3 * i) - s.segment<3>(3 * j);
        const double r = d.norm();
        const Mat3 dd = d * d.transpose();
        const Mat3 b = dd * (3.0 / std::pow(r, 5)) - Mat3::Identity() / (r * r * r);
        h.block<3, 3>(3 * i, 3 * i) += b;
        h.block<3, 3>(3 * j, 3 * j) += b;
        h.block<3, 3>(3 * i, 3 * j) -= b;
        h.block<3, 3>(3 * j, 3 * i) -= b;
      }
    return h;
  }
};

double max_ion_norm(const Eigen::VectorXd& g) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < g.size() / 3; ++i) m = std::max(m, g.segment<3>(3 * i).norm());
  return m;
}

Positions unpack(const Eigen::VectorXd& s, double length) {
  Positions x(std::size_t(s.size() / 3));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = s.segment<3>(3 * Eigen::Index(i)) * length;
  return x;
}

// Sorted summation so the result does not depend on term order.
double ordered_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += t;
  return acc;
}

}  // namespace

void SolverOptions::validate(bool allow_zero_restarts) const {
  if (restarts == 0 && !allow_zero_restarts) throw ConfigError("solver: restarts must be >= 1");
  if (!(force_tolerance > 0.0)) throw ConfigError("solver: force tolerance must be positive");
  if (!(init_radius_scale > 0.0)) throw ConfigError("solver: init radius scale must be positive");
  if (max_iterations == 0) throw ConfigError("solver: max_iterations must be >= 1");
}

double characteristic_length(const IonSpecies& species, double omega_r) {
  if (!(omega_r > 0.0)) throw ConfigError("characteristic_length: omega_r must be positive");
  return std::cbrt(species.coulomb_prefactor() / (species.mass * omega_r * omega_r));
}

double total_energy(const Positions& x, const PotentialModel& model, const IonSpecies& species) {
  std::vector<double> trap, pair;
  trap.reserve(x.size());
  pair.reserve(x.size() * (x.size() - 1) / 2);
  const double kq2 = species.coulomb_prefactor();
  for (const auto& r : x) {
    if (!model.contains(r)) throw DomainError("total_energy: ion outside the model domain");
    trap.push_back(model.energy(r));
  }
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double d = (x[i] - x[j]).norm();
      if (d < kMinSeparation) throw ConfigError("total_energy: coincident ions");
      pair.push_back(kq2 / d);
    }
  return ordered_sum(trap) + ordered_sum(pair);
}

Positions total_gradient(const Positions& x, const PotentialModel& model,
                         const IonSpecies& species) {
  const double kq2 = species.coulomb_prefactor();
  Positions g(x.size(), Vec3::Zero());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = model.gradient(x[i]);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const Vec3 d = x[i] - x[j];
      const double r = d.norm();
      if (r < kMinSeparation) throw ConfigError("total_gradient: coincident ions");
      const Vec3 f = kq2 * d / (r * r * r);
      g[i] -= f;
      g[j] += f;
    }
  return g;
}

Eigen::MatrixXd crystal_hessian(const Positions& x, const PotentialModel& model,
                                const IonSpecies& species) {
  const auto n = Eigen::Index(x.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  for (Eigen::Index i = 0; i < n; ++i) h.block<3, 3>(3 * i, 3 * i) = model.hessian(x[std::size_t(i)]);
  const double kq2 = species.coulomb_prefactor();
  if (kq2 == 0.0) return h;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Vec3 d = x[std::size_t(i)] - x[std::size_t(j)];
      const double r = d.norm();
      if (r < kMinSeparation) throw ConfigError("crystal_hessian: coincident ions");
      const Mat3 dd = d * d.transpose();
      const Mat3 b = kq2 * (dd * (3.0 / std::pow(r, 5)) -
                            Mat3::Identity() / (r * r * r));
      h.block<3, 3>(3 * i, 3 * i) += b;
      h.block<3, 3>(3 * j, 3 * j) += b;
      h.block<3, 3>(3 * i, 3 * j) -= b;
      h.block<3, 3>(3 * j, 3 * i) -= b;
    }
  return h;
}

LocalMinimization minimize_from(const PotentialModel& model, const IonSpecies& species,
                                const Positions& start, const SolverOptions& options,
                                double length_scale, bool record_trace) {
  const double kq2 = species.coulomb_prefactor();
  const ScaledProblem prob{model, length_scale, kq2 / length_scale};
  const auto n = Eigen::Index(start.size());

  Eigen::VectorXd s(3 * n), g, g_new, s_new;
  for (Eigen::Index i = 0; i < n; ++i) s.segment<3>(3 * i) = start[std::size_t(i)] / length_scale;
  double e = prob.evaluate(s, g);

  LocalMinimization out;
  if (!std::isfinite(e)) {
    out.positions = start;
    out.energy = e;
    out.max_force = std::numeric_limits<double>::infinity();
    return out;
  }
  if (record_trace) out.energy_trace.push_back(e);

  double bb_step = 0.1 / std::max(1.0, max_ion_norm(g));
  constexpr double kNewtonSwitch = 1e-3;
  constexpr double kArmijo = 1e-4;

  auto accept = [&](double e_new) {
    e = e_new;
    s.swap(s_new);
    g.swap(g_new);
    if (record_trace) out.energy_trace.push_back(e);
  };

  std::size_t it = 0;
  for (; it < options.max_iterations; ++it) {
    const double fmax = max_ion_norm(g);
    if (fmax < options.force_tolerance) {
      out.converged = true;
      break;
    }

    bool stepped = false;
    if (fmax < kNewtonSwitch) {
      // Damped Newton on the non-zero modes.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(prob.hessian(s));
      const Eigen::VectorXd lam = es.eigenvalues();
      const double lam_scale = lam.cwiseAbs().maxCoeff();
      const Eigen::VectorXd proj = es.eigenvectors().transpose() * g;
      Eigen::VectorXd coef = Eigen::VectorXd::Zero(lam.size());
      for (Eigen::Index k = 0; k < lam.size(); ++k)
        if (std::abs(lam[k]) > 1e-10 * lam_scale) coef[k] = -proj[k] / std::abs(lam[k]);
      const Eigen::VectorXd d = es.eigenvectors() * coef;
      const double slope = g.dot(d);
      double t = 1.0;
      for (int k = 0; k < 40 && slope < 0; ++k, t *= 0.5) {
        s_new = s + t * d;
        const double e_new = prob.evaluate(s_new, g_new);
        if (!std::isfinite(e_new)) continue;
        const bool armijo = e_new <= e + kArmijo * t * slope;
        // Near the roundoff floor energy differences vanish; accept a step that
        // keeps the energy within rounding and reduces the force.
        const bool floor_ok = e_new <= e + 1e-13 * std::abs(e) && max_ion_norm(g_new) < fmax;
        if (armijo || floor_ok) {
          accept(e_new);
          stepped = true;
          break;
        }
      }
    }

    if (!stepped) {
      // Barzilai-Borwein gradient step with backtracking.
      double t = bb_step;
      const double gg = g.squaredNorm();
      for (int k = 0; k < 60; ++k, t *= 0.5) {
        s_new = s - t * g;
        const double e_new = prob.evaluate(s_new, g_new);
        if (!std::isfinite(e_new)) continue;
        if (e_new <= e - kArmijo * t * gg ||
            (e_new <= e + 1e-13 * std::abs(e) && max_ion_norm(g_new) < fmax)) {
          const Eigen::VectorXd ds = s_new - s;
          const Eigen::VectorXd dg = g_new - g;
          accept(e_new);
          stepped = true;
          const double sy = ds.dot(dg);
          bb_step = sy > 0 ? std::clamp(ds.squaredNorm() / sy, 1e-10, 1e4) : std::min(2.0 * t, 1e4);
          break;
        }
      }
    }
    if (!stepped) break;  // stalled
  }

  out.iterations = it;
  out.positions = unpack(s, length_scale);
  out.energy = e * prob.energy_unit;
  out.max_force = max_ion_norm(g) * prob.energy_unit / length_scale;
  if (!out.converged) out.converged = max_ion_norm(g) < options.force_tolerance;
  return out;
}

CrystalState find_equilibrium(const PotentialModel& model, const IonSpecies& species,
                              std::size_t n_ions, const SolverOptions& options,
                              const std::vector<Positions>& starts) {
  species.validate();
  options.validate(!starts.empty());
  if (n_ions == 0) throw ConfigError("find_equilibrium: n_ions must be >= 1");
  for (const auto& st : starts)
    if (st.size() != n_ions) throw ConfigError("find_equilibrium: start has the wrong ion count");

  const SecularFrequencies trap = secular_frequencies(model, species);
  const double omega_r = trap.omega_r();
  const double ell = characteristic_length(species, omega_r);
  const double force_unit = species.coulomb_prefactor() / (ell * ell);
  const double radius = options.init_radius_scale * ell * std::cbrt(double(n_ions));

  const std::size_t total = starts.size() + options.restarts;
  std::vector<LocalMinimization> results(total);
  std::vector<std::exception_ptr> errors(total);

  const int threads = options.threads > 0 ? options.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::ptrdiff_t r = 0; r < std::ptrdiff_t(total); ++r) {
    try {
      Positions x0;
      if (std::size_t(r) < starts.size()) {
        x0 = starts[std::size_t(r)];
      } else {
        auto rng = make_stream(options.rng_seed, std::uint64_t(std::size_t(r) - starts.size()),
                               kInitTag);
        x0.reserve(n_ions);
        for (std::size_t i = 0; i < n_ions; ++i) {
          Vec3 p;
          int tries = 0;
          do {
            if (++tries > 10000) throw DomainError("cannot place initial ions inside the model domain");
            Vec3 u;
            do {
              u = Vec3(2 * uniform01(rng) - 1, 2 * uniform01(rng) - 1, 2 * uniform01(rng) - 1);
            } while (u.squaredNorm() > 1.0);
            p = trap.minimum;
            for (int a = 0; a < 3; ++a) p += radius * (omega_r / trap.omega[a]) * u[a] * trap.axes.col(a);
          } while (!model.contains(p));
          x0.push_back(p);
        }
      }
      results[std::size_t(r)] = minimize_from(model, species, x0, options, ell);
    } catch (...) {
      errors[std::size_t(r)] = std::current_exception();
    }
  }

  std::ptrdiff_t best = -1;
  double best_residual = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < total; ++r) {
    if (errors[r]) continue;
    const auto& res = results[r];
    best_residual = std::min(best_residual, res.max_force);
    if (!res.converged) continue;
    if (best < 0) {
      best = std::ptrdiff_t(r);
      continue;
    }
    const double eb = results[std::size_t(best)].energy;
    // Ties within 1e-12 relative keep the earlier start.
    if (res.energy < eb - 1e-12 * std::abs(eb)) best = std::ptrdiff_t(r);
  }
  if (best < 0) {
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
    std::ostringstream msg;
    msg << "no equilibrium search converged in " << total << " starts; best residual force "
        << best_residual << " N (" << best_residual / force_unit << " of the characteristic force)";
    throw ConvergenceError(msg.str(), best_residual);
  }

  CrystalState state;
  state.positions = results[std::size_t(best)].positions;
  state.n_ions = n_ions;
  state.seed = options.rng_seed;
  state.restarts_used = total;
  state.best_start = std::size_t(best);
  state.total_energy = total_energy(state.positions, model, species);
  double fmax = 0.0;
  for (const auto& f : total_gradient(state.positions, model, species)) fmax = std::max(fmax, f.norm());
  state.max_residual_force = fmax;
  state.converged = fmax < options.force_tolerance * force_unit;
  return state;
}

bool ModeSpectrum::is_zero_mode(Eigen::Index i) const {
  return std::abs(omega_squared[i]) < 1e-8 * reference_omega * reference_omega;
}

std::size_t ModeSpectrum::zero_mode_count() const {
  std::size_t c = 0;
  for (Eigen::Index i = 0; i < omega_squared.size(); ++i) c += is_zero_mode(i) ? 1 : 0;
  return c;
}

std::size_t ModeSpectrum::unstable_mode_count() const {
  std::size_t c = 0;
  for (Eigen::Index i = 0; i < omega_squared.size(); ++i)
    c += (omega_squared[i] < 0 && !is_zero_mode(i)) ? 1 : 0;
  return c;
}

ModeSpectrum normal_modes(const CrystalState& state, const PotentialModel& model,
                          const IonSpecies& species) {
  if (!state.converged) throw ConfigError("normal_modes: crystal state is not converged");
  species.validate();
  const Eigen::MatrixXd h = crystal_hessian(state.positions, model, species) / species.mass;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (h + h.transpose()));
  ModeSpectrum out;
  out.omega_squared = es.eigenvalues();
  out.eigenvectors = es.eigenvectors();
  out.frequencies.resize(out.omega_squared.size());
  for (Eigen::Index i = 0; i < out.omega_squared.size(); ++i) {
    const double w2 = out.omega_squared[i];
    out.frequencies[i] = w2 >= 0 ? std::sqrt(w2) : -std::sqrt(-w2);
  }
  out.reference_omega = secular_frequencies(model, species).omega_r();
  return out;
}

}  // namespace ringtrap
