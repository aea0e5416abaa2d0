#include "ringtrap/sweep.hpp"

#include <cmath>
#include <random>

#include "ringtrap/errors.hpp"
#include "ringtrap/random.hpp"

namespace ringtrap {
namespace {

constexpr std::uint32_t kWarmTag = 0x5eed;

SweepPoint apply(const SweepPoint& p, const SweepDelta& d, double sign) {
  if (const auto* h = std::get_if<HarmonicParameters>(&p)) {
    HarmonicParameters out = *h;
    out.omega_x += sign * d.omega.x();
    out.omega_y += sign * d.omega.y();
    out.omega_z += sign * d.omega.z();
    return out;
  }
  TrapConfiguration out = std::get<TrapConfiguration>(p);
  for (const auto& [name, dv] : d.voltages) out.dc_voltages[name] += sign * dv;
  return out;
}

[[noreturn]] void rethrow_at_step(std::size_t step) {
  const std::string prefix = "sweep step " + std::to_string(step) + ": ";
  try {
    throw;
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(prefix + e.what(), e.residual());
  } catch (const NonConfiningError& e) {
    throw NonConfiningError(prefix + e.what());
  } catch (const DomainError& e) {
    throw DomainError(prefix + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  }
}

}  // namespace

void SweepSpec::validate() const {
  if (deltas.empty()) throw ConfigError("sweep: at least one step is required");
  if (n_ions == 0) throw ConfigError("sweep: n_ions must be >= 1");
  options.validate();
  thresholds.validate();
  const bool harmonic = std::holds_alternative<HarmonicParameters>(base);
  for (const auto& d : deltas) {
    if (harmonic && !d.voltages.empty())
      throw ConfigError("sweep: voltage steps need the field backend");
    if (!harmonic && !d.omega.isZero(0.0))
      throw ConfigError("sweep: frequency steps need the harmonic backend");
  }
  for (const auto& p : points()) {
    if (const auto* h = std::get_if<HarmonicParameters>(&p))
      h->validate();
    else
      std::get<TrapConfiguration>(p).validate();
  }
}

std::vector<SweepPoint> SweepSpec::points() const {
  std::vector<SweepPoint> out;
  SweepPoint cur = base;
  for (const auto& d : deltas) {
    cur = apply(cur, d, 1.0);
    out.push_back(cur);
  }
  return out;
}

ModelFactory harmonic_factory(const IonSpecies& species) {
  return [species](const SweepPoint& p) -> std::unique_ptr<PotentialModel> {
    const auto* h = std::get_if<HarmonicParameters>(&p);
    if (!h) throw ConfigError("harmonic model factory given a field configuration");
    return harmonic_model(*h, species);
  };
}

SweepResult run_sweep(const SweepSpec& spec, const IonSpecies& species,
                      const ModelFactory& factory, const SweepProgress& progress) {
  spec.validate();
  SweepResult result;
  const auto pts = spec.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    SweepStep step;
    step.index = i;
    step.point = pts[i];
    try {
      const auto model = factory(pts[i]);
      step.secular = secular_frequencies(*model, species);
      if (spec.warm_start && i > 0) {
        const double ell = characteristic_length(species, step.secular.omega_r());
        auto rng = make_stream(spec.options.rng_seed, i, kWarmTag);
        std::normal_distribution<double> noise(0.0, 0.01 * ell);
        Positions start = result.steps.back().state.positions;
        for (auto& r : start)
          for (int a = 0; a < 3; ++a) r[a] += noise(rng);
        SolverOptions opts = spec.options;
        opts.restarts = spec.fresh_restarts;
        step.state = find_equilibrium(*model, species, spec.n_ions, opts, {start});
      } else {
        step.state = find_equilibrium(*model, species, spec.n_ions, spec.options);
      }
      step.report = classify(step.state, spec.thresholds);
    } catch (const Error&) {
      rethrow_at_step(i);
    }
    if (i > 0 && step.report.category != result.steps.back().report.category)
      result.transitions.push_back({i, result.steps.back().report.category, step.report.category});
    if (progress) progress(step);
    result.steps.push_back(std::move(step));
  }
  return result;
}

SweepSpec reverse_spec(const SweepSpec& spec) {
  SweepSpec rev = spec;
  const auto pts = spec.points();
  rev.base = pts.back();
  rev.deltas.clear();
  rev.deltas.push_back(SweepDelta{});
  for (std::size_t k = spec.deltas.size() - 1; k >= 1; --k) {
    SweepDelta d = spec.deltas[k];
    d.omega = -d.omega;
    for (auto& [name, v] : d.voltages) v = -v;
    rev.deltas.push_back(d);
  }
  return rev;
}

std::vector<HysteresisFlag> compare_hysteresis(const SweepResult& forward,
                                               const SweepResult& reverse) {
  if (forward.steps.size() != reverse.steps.size())
    throw ConfigError("hysteresis comparison needs sweeps of equal length");
  std::vector<HysteresisFlag> flags;
  const std::size_t n = forward.steps.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto f = forward.steps[i].report.category;
    const auto r = reverse.steps[n - 1 - i].report.category;
    if (f != r) flags.push_back({i, f, r});
  }
  return flags;
}

PlanarityBoundary find_planarity_boundary(std::size_t n_ions, const HarmonicParameters& base,
                                          double alpha_lo, double alpha_hi, double tolerance,
                                          const SolverOptions& options,
                                          const IonSpecies& species,
                                          const StructureThresholds& thresholds) {
  if (!(alpha_lo > 0.0 && alpha_hi > alpha_lo))
    throw ConfigError("planarity boundary: need 0 < alpha_lo < alpha_hi");
  if (!(tolerance > 0.0)) throw ConfigError("planarity boundary: tolerance must be positive");
  base.validate();
  const double omega_r = base.omega_r();

  PlanarityBoundary out;
  auto probe = [&](double alpha) {
    HarmonicParameters p = base;
    p.omega_z = alpha * omega_r;
    const HarmonicModel model(p, species);
    const CrystalState st = find_equilibrium(model, species, n_ions, options);
    const StructureReport rep = classify(st, thresholds);
    out.probes.push_back({alpha, rep.planar_family, rep.category, st.total_energy});
    return rep.planar_family;
  };

  const bool lo_planar = probe(alpha_lo);
  const bool hi_planar = probe(alpha_hi);
  if (lo_planar == hi_planar)
    throw ConfigError(std::string("planarity boundary: both ends of the alpha bracket are ") +
                      (lo_planar ? "planar" : "non-planar"));
  if (lo_planar)
    throw ConfigError("planarity boundary: bracket is inverted (planar at the low end)");

  double lo = alpha_lo, hi = alpha_hi;
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    (probe(mid) ? hi : lo) = mid;
  }
  out.lo = lo;
  out.hi = hi;
  out.alpha = 0.5 * (lo + hi);
  return out;
}

}  // namespace ringtrap
