#include "ringtrap/io/orchestrate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>

#include <omp.h>

#include "ringtrap/io/render.hpp"
#include "ringtrap/io/serialize.hpp"
#include "ringtrap/pseudopotential.hpp"
#include "ringtrap/sha256.hpp"

namespace ringtrap::io {
namespace {

namespace fs = std::filesystem;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Radius of the region checked for rotational symmetry around the RF null.
constexpr double kSymmetryRadius = 50e-6;

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  void prepare() {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory '" + dir_.string() + "': " + ec.message());
    fs::remove(dir_ / "error.json", ec);
    fs::remove(dir_ / "manifest.json", ec);
  }

  void write(const std::string& rel, const std::string& content, const std::string& type,
             const std::string& stage) {
    raw_write(rel, content);
    entries_.push_back({rel, type, to_hex(sha256(content)), stage});
  }

  void note_cache(const std::string& basis, bool hit) {
    if (!cache_.count(basis)) cache_[basis] = hit;
  }

  void finish() {
    std::sort(entries_.begin(), entries_.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
    json arts = json::array();
    for (const auto& e : entries_)
      arts.push_back({{"path", e.path}, {"type", e.type}, {"sha256", e.sha256}, {"stage", e.stage}});
    json m = {{"artifacts", arts}};
    if (!cache_.empty()) {
      json c = json::array();
      for (const auto& [id, hit] : cache_) c.push_back({{"basis", id}, {"cache_hit", hit}});
      m["field_cache"] = c;
    }
    raw_write("manifest.json", dump(m));
  }

  void raw_write(const std::string& rel, const std::string& content) const {
    const fs::path p = dir_ / rel;
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw IoError("cannot write '" + p.string() + "'");
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<ManifestEntry> entries_;
  std::map<std::string, bool> cache_;
};

class Log {
 public:
  Log(std::ostream* os, bool verbose) : os_(os), verbose_(verbose) {}
  template <class... T>
  void info(const T&... parts) const {
    if (!os_) return;
    ((*os_) << ... << parts) << '\n';
  }
  template <class... T>
  void debug(const T&... parts) const {
    if (verbose_) info(parts...);
  }

 private:
  std::ostream* os_;
  bool verbose_;
};

// Everything derived from the RF basis; DC bases are streamed per model.
struct FieldContext {
  const FieldBackend* backend = nullptr;
  std::shared_ptr<const ElectrodeMask> mask;
  std::unique_ptr<BasisCache> cache;
  ScalarFieldGrid pseudo;
  RfAnalysis rf;
  SymmetryCheck symmetry;
};

ScalarFieldGrid basis(FieldContext& ctx, const std::string& id, Outputs& out, const Log& log) {
  BasisOrigin origin;
  log.debug("basis ", id, ": ", ctx.cache->path_for(*ctx.mask, id, ctx.backend->laplace.tolerance).string());
  auto g = obtain_basis(ctx.mask, id, ctx.backend->laplace, ctx.cache.get(), &origin);
  out.note_cache(id, origin.cache_hit);
  log.info("basis ", id, origin.cache_hit ? " (cache hit)" : " (solved)", ", residual ", origin.residual);
  return g;
}

FieldContext prepare_field(const RunConfig& cfg, Outputs& out, const Log& log, bool symmetry) {
  FieldContext ctx;
  ctx.backend = &cfg.field();
  log.info("rasterizing geometry at ", ctx.backend->spacing, " m spacing");
  ctx.mask = std::make_shared<const ElectrodeMask>(rasterize(ctx.backend->geometry, ctx.backend->spacing));
  ctx.cache = std::make_unique<BasisCache>(cfg.cache_dir);
  const ScalarFieldGrid rf = basis(ctx, "rf", out, log);
  ctx.pseudo = pseudopotential_grid(rf, ctx.backend->trap.drive, cfg.species);
  ctx.rf = analyze_rf(rf, ctx.pseudo, ctx.backend->trap.drive, cfg.species);
  if (symmetry) ctx.symmetry = check_symmetry(ctx.pseudo, kSymmetryRadius);
  return ctx;
}

std::unique_ptr<FieldModel> build_field_model(FieldContext& ctx, const TrapConfiguration& trap,
                                              const IonSpecies& species, Outputs& out,
                                              const Log& log) {
  trap.validate();
  FieldModelBuilder builder(ctx.pseudo, species);
  for (const auto& name : electrode_names()) {
    const double v = trap.voltage(name);
    if (v != 0.0) builder.add_basis(basis(ctx, name, out, log), v);
  }
  return std::move(builder).build();
}

SolverOptions solver_options(const RunConfig& cfg) {
  SolverOptions o = cfg.solver;
  o.rng_seed = cfg.seed;
  o.threads = cfg.threads;
  return o;
}

// Model plus micromotion inputs for single-configuration commands.
struct Setup {
  std::unique_ptr<PotentialModel> model;
  std::optional<FieldContext> field;
  std::optional<double> q_r;
  Vec3 rf_null = Vec3::Zero();
};

Setup make_setup(const RunConfig& cfg, Outputs& out, const Log& log) {
  Setup s;
  if (cfg.harmonic()) {
    s.model = harmonic_model(cfg.harmonic_backend().params, cfg.species);
    s.q_r = cfg.micromotion.q_r;
    s.rf_null = cfg.micromotion.rf_null.value_or(Vec3::Zero());
    return s;
  }
  s.field = prepare_field(cfg, out, log, false);
  auto model = build_field_model(*s.field, cfg.field().trap, cfg.species, out, log);
  s.q_r = s.field->rf.q_r;
  s.rf_null = cfg.field().rf_null ? *cfg.field().rf_null : model->rf_null();
  s.model = std::move(model);
  return s;
}

json trap_summary(const SecularFrequencies& sec, std::size_t n_ions) {
  json j = to_json(sec);
  const double alpha = sec.omega[2] / sec.omega_r();
  j["aspect_ratio"] = alpha;
  j["critical_aspect_ratio"] = critical_aspect_ratio(n_ions);
  j["above_planarity_guideline"] = alpha >= critical_aspect_ratio(n_ions);
  return j;
}

json full_report(const StructureReport& rep, const CrystalState& st, const Setup& s,
                 const SecularFrequencies& sec, std::size_t n_ions) {
  json j = to_json(rep);
  j["total_energy_j"] = st.total_energy;
  j["trap"] = trap_summary(sec, n_ions);
  if (s.q_r) {
    const MicromotionMap mm = micromotion_map(st.positions, *s.q_r, s.rf_null);
    j["micromotion"] = to_json(mm);
    if (st.positions.size() >= 2) {
      // The pair of ions farthest apart in the plane.
      std::size_t bi = 0, bj = 1;
      double best = -1;
      for (std::size_t i = 0; i < st.positions.size(); ++i)
        for (std::size_t k = i + 1; k < st.positions.size(); ++k) {
          const double d = (st.positions[i] - st.positions[k]).head<2>().norm();
          if (d > best) best = d, bi = i, bj = k;
        }
      j["micromotion"]["widest_pair"] = {{"ions", {bi, bj}},
                                         {"separation_m", best},
                                         {"differential_amplitude_m", mm.differential(bi, bj)}};
    }
  }
  return j;
}

CrystalState solve_or_load(const RunRequest& req, const Setup& s, const Log& log, Outputs& out,
                           const std::string& stage, bool allow_state = true) {
  if (allow_state && req.state_path) {
    CrystalState st = load_state(*req.state_path);
    if (st.n_ions == 0) throw ConfigError("state file has no ions");
    return st;
  }
  const RunConfig& cfg = req.config;
  log.info("solving for ", cfg.n_ions, " ions with ", cfg.solver.restarts, " restarts");
  CrystalState st = find_equilibrium(*s.model, cfg.species, cfg.n_ions, solver_options(cfg));
  log.info("energy ", st.total_energy, " J, residual force ", st.max_residual_force, " N");
  out.write("state.json", dump(to_json(st)), "state", stage);
  return st;
}

// --------------------------------------------------------------------------

void cmd_fields_solve(const RunRequest& req, Outputs& out, const Log& log) {
  const RunConfig& cfg = req.config;
  if (cfg.harmonic()) throw ConfigError("fields solve needs the field backend");
  FieldContext ctx;
  ctx.backend = &cfg.field();
  ctx.mask = std::make_shared<const ElectrodeMask>(rasterize(ctx.backend->geometry, ctx.backend->spacing));
  ctx.cache = std::make_unique<BasisCache>(cfg.cache_dir);
  json bases = json::array();
  std::vector<std::string> ids{"rf"};
  for (const auto& n : electrode_names()) ids.push_back(n);
  for (const auto& id : ids) {
    const ScalarFieldGrid g = basis(ctx, id, out, log);
    bases.push_back({{"basis", id},
                     {"residual", g.achieved_residual},
                     {"cache_file", ctx.cache->path_for(*ctx.mask, id, ctx.backend->laplace.tolerance)
                                        .filename()
                                        .string()}});
  }
  const GridShape& sh = ctx.mask->shape;
  json j = {{"geometry_hash", to_hex(ctx.mask->geometry_hash)},
            {"spacing_m", sh.spacing},
            {"dims", {sh.dims[0], sh.dims[1], sh.dims[2]}},
            {"origin_m", to_json(sh.origin)},
            {"tolerance", ctx.backend->laplace.tolerance},
            {"bases", bases}};
  out.write("fields.json", dump(j), "field-bases", "fields");
}

void cmd_fields_info(const RunRequest& req, Outputs& out, const Log& log) {
  const RunConfig& cfg = req.config;
  json j;
  const double a_crit = critical_aspect_ratio(cfg.n_ions);
  if (cfg.harmonic()) {
    const auto& p = cfg.harmonic_backend().params;
    const HarmonicModel model(p, cfg.species);
    j["trap"] = trap_summary(secular_frequencies(model, cfg.species), cfg.n_ions);
    j["planarity_guideline"] = {{"n_ions", cfg.n_ions},
                                {"critical_aspect_ratio", a_crit},
                                {"omega_r_hz", p.omega_r() / kTwoPi},
                                {"omega_z_required_hz", a_crit * p.omega_r() / kTwoPi}};
  } else {
    FieldContext ctx = prepare_field(cfg, out, log, true);
    j["rf"] = to_json(ctx.rf);
    j["pseudopotential_symmetry"] = to_json(ctx.symmetry);
    j["pseudopotential_symmetry"]["radius_m"] = kSymmetryRadius;
    const double omega_r_rf = 0.5 * (ctx.rf.curvature_frequency.x() + ctx.rf.curvature_frequency.y());
    double omega_r = omega_r_rf;
    bool any_dc = false;
    for (const auto& [name, v] : cfg.field().trap.dc_voltages) any_dc = any_dc || v != 0.0;
    if (any_dc) {
      const auto model = build_field_model(ctx, cfg.field().trap, cfg.species, out, log);
      const SecularFrequencies sec = secular_frequencies(*model, cfg.species);
      j["trap"] = trap_summary(sec, cfg.n_ions);
      omega_r = sec.omega_r();
    }
    j["planarity_guideline"] = {{"n_ions", cfg.n_ions},
                                {"critical_aspect_ratio", a_crit},
                                {"omega_r_hz", omega_r / kTwoPi},
                                {"omega_z_required_hz", a_crit * omega_r / kTwoPi}};
    log.info("RF-only aspect ratio ", ctx.rf.alpha, ", q_r ", ctx.rf.q_r);
  }
  out.write("fields_info.json", dump(j), "field-info", "fields");
}

void write_crystal_outputs(const RunConfig& cfg, const CrystalState& st, const Setup& s,
                           Outputs& out, const std::string& prefix, const std::string& stage,
                           const RenderSpec& render) {
  const SecularFrequencies sec = secular_frequencies(*s.model, cfg.species);
  const StructureReport rep = classify(st, cfg.structure);
  out.write(prefix + "report.json", dump(full_report(rep, st, s, sec, cfg.n_ions)), "report", stage);
  if (st.n_ions >= 2) out.write(prefix + "spacing.csv", spacing_csv(rep), "spacing", stage);
  out.write(prefix + "crystal.svg", render_crystal(st.positions, render).svg, "render", stage);
}

void cmd_crystal_solve(const RunRequest& req, Outputs& out, const Log& log) {
  const Setup s = make_setup(req.config, out, log);
  const CrystalState st = solve_or_load(req, s, log, out, "crystal", false);
  write_crystal_outputs(req.config, st, s, out, "", "crystal", req.config.render);
}

void cmd_crystal_modes(const RunRequest& req, Outputs& out, const Log& log) {
  const Setup s = make_setup(req.config, out, log);
  const CrystalState st = solve_or_load(req, s, log, out, "crystal");
  const ModeSpectrum m = normal_modes(st, *s.model, req.config.species);
  log.info(m.zero_mode_count(), " zero modes, ", m.unstable_mode_count(), " unstable modes");
  out.write("modes.json", dump(to_json(m)), "modes", "modes");
}

void cmd_crystal_classify(const RunRequest& req, Outputs& out, const Log& log) {
  const Setup s = make_setup(req.config, out, log);
  const CrystalState st = solve_or_load(req, s, log, out, "crystal");
  const SecularFrequencies sec = secular_frequencies(*s.model, req.config.species);
  const StructureReport rep = classify(st, req.config.structure);
  log.info("category ", to_string(rep.category));
  out.write("report.json", dump(full_report(rep, st, s, sec, req.config.n_ions)), "report", "classify");
  if (st.n_ions >= 2) out.write("spacing.csv", spacing_csv(rep), "spacing", "classify");
}

void cmd_render(const RunRequest& req, Outputs& out, const Log& log) {
  CrystalState st;
  if (req.state_path) {
    st = load_state(*req.state_path);
  } else {
    const Setup s = make_setup(req.config, out, log);
    st = solve_or_load(req, s, log, out, "crystal");
  }
  out.write("crystal.svg", render_crystal(st.positions, req.config.render).svg, "render", "render");
}

std::string summary_row(const SweepStep& s) {
  const auto& r = s.report;
  std::string row = std::to_string(s.index) + "," + to_string(r.category) + "," +
                    format_double(r.spacing.mean) + "," + format_double(r.extent_major) + "," +
                    format_double(r.extent_minor) + "," + format_double(r.max_abs_z) + "," +
                    format_double(s.state.total_energy);
  for (int a = 0; a < 3; ++a) row += "," + format_double(s.secular.omega[a] / kTwoPi);
  return row + "\n";
}

void write_sweep(const SweepResult& res, const RenderSpec& render, Outputs& out,
                 const std::string& prefix, const std::string& stage) {
  // Shared scale across steps so frames are comparable.
  RenderSpec spec = render;
  if (spec.pixels_per_meter == 0.0) {
    double ppm = std::numeric_limits<double>::infinity();
    for (const auto& s : res.steps) ppm = std::min(ppm, render_crystal(s.state.positions, render).pixels_per_meter);
    spec.pixels_per_meter = ppm;
  }
  std::string csv =
      "step,category,mean_spacing_m,extent_major_m,extent_minor_m,max_abs_z_m,total_energy_j,"
      "omega_1_hz,omega_2_hz,omega_3_hz\n";
  for (const auto& s : res.steps) {
    char dir[32];
    std::snprintf(dir, sizeof dir, "step_%03zu/", s.index);
    const std::string d = prefix + dir;
    json rep = to_json(s.report);
    rep["total_energy_j"] = s.state.total_energy;
    rep["trap"] = to_json(s.secular);
    rep["configuration"] = to_json(s.point);
    out.write(d + "state.json", dump(to_json(s.state)), "state", stage);
    out.write(d + "report.json", dump(rep), "report", stage);
    out.write(d + "crystal.svg", render_crystal(s.state.positions, spec).svg, "render", stage);
    csv += summary_row(s);
  }
  json tr = json::array();
  for (const auto& t : res.transitions)
    tr.push_back({{"step", t.step}, {"from", to_string(t.from)}, {"to", to_string(t.to)}});
  out.write(prefix + "summary.csv", csv, "summary", stage);
  out.write(prefix + "transitions.json", dump(tr), "transitions", stage);
}

void cmd_sweep_run(const RunRequest& req, Outputs& out, const Log& log) {
  const RunConfig& cfg = req.config;
  if (!cfg.sweep) throw ConfigError("sweep run needs a 'sweep' section in the config");
  SweepSpec spec;
  spec.deltas = cfg.sweep->deltas;
  spec.n_ions = cfg.n_ions;
  spec.options = solver_options(cfg);
  spec.warm_start = cfg.sweep->warm_start;
  spec.fresh_restarts = cfg.sweep->fresh_restarts;
  spec.thresholds = cfg.structure;

  std::optional<FieldContext> ctx;
  ModelFactory factory;
  if (cfg.harmonic()) {
    spec.base = cfg.harmonic_backend().params;
    factory = harmonic_factory(cfg.species);
  } else {
    spec.base = cfg.field().trap;
    ctx = prepare_field(cfg, out, log, false);
    factory = [&](const SweepPoint& p) -> std::unique_ptr<PotentialModel> {
      return build_field_model(*ctx, std::get<TrapConfiguration>(p), cfg.species, out, log);
    };
  }
  spec.validate();

  auto progress = [&](const SweepStep& s) {
    log.info("step ", s.index, ": ", to_string(s.report.category), ", mean spacing ",
             s.report.spacing.mean, " m");
  };
  const SweepResult fwd = run_sweep(spec, cfg.species, factory, progress);
  write_sweep(fwd, cfg.render, out, "", "sweep");

  json meta = {{"backend", cfg.harmonic() ? "harmonic" : "field"},
               {"n_ions", cfg.n_ions},
               {"warm_start", spec.warm_start},
               {"fresh_restarts", spec.fresh_restarts},
               {"seed", cfg.seed},
               {"base", to_json(spec.base)}};
  json pts = json::array();
  for (const auto& p : spec.points()) pts.push_back(to_json(p));
  meta["points"] = pts;

  if (cfg.sweep->reverse) {
    log.info("reverse sweep");
    const SweepResult rev = run_sweep(reverse_spec(spec), cfg.species, factory, progress);
    write_sweep(rev, cfg.render, out, "reverse/", "sweep-reverse");
    json flags = json::array();
    for (const auto& f : compare_hysteresis(fwd, rev))
      flags.push_back({{"step", f.step}, {"forward", to_string(f.forward)}, {"reverse", to_string(f.reverse)}});
    out.write("hysteresis.json", dump(flags), "hysteresis", "sweep-reverse");
  }
  out.write("sweep.json", dump(meta), "sweep", "sweep");
}

void cmd_planarity_boundary(const RunRequest& req, Outputs& out, const Log& log) {
  const RunConfig& cfg = req.config;
  if (!cfg.harmonic()) throw ConfigError("planarity boundary needs the harmonic backend");
  const auto& pc = cfg.planarity;
  std::vector<std::size_t> ns = pc.n_ions.empty() ? std::vector<std::size_t>{cfg.n_ions} : pc.n_ions;
  json results = json::array();
  for (std::size_t n : ns) {
    const PlanarityBoundary b = find_planarity_boundary(n, cfg.harmonic_backend().params, pc.alpha_min,
                                                        pc.alpha_max, pc.tolerance, solver_options(cfg),
                                                        cfg.species, cfg.structure);
    const double crit = critical_aspect_ratio(n);
    log.info("N=", n, ": boundary ", b.alpha, " (guideline ", crit, ")");
    json probes = json::array();
    for (const auto& p : b.probes)
      probes.push_back({{"alpha", p.alpha}, {"planar", p.planar}, {"category", to_string(p.category)},
                        {"total_energy_j", p.energy}});
    results.push_back({{"n_ions", n},
                       {"alpha_boundary", b.alpha},
                       {"bracket", {b.lo, b.hi}},
                       {"critical_aspect_ratio", crit},
                       {"relative_deviation", (b.alpha - crit) / crit},
                       {"probes", probes}});
  }
  out.write("boundary.json", dump(results), "planarity-boundary", "planarity");
}

}  // namespace

const char* to_string(Command c) {
  switch (c) {
    case Command::kFieldsSolve: return "fields solve";
    case Command::kFieldsInfo: return "fields info";
    case Command::kCrystalSolve: return "crystal solve";
    case Command::kCrystalModes: return "crystal modes";
    case Command::kCrystalClassify: return "crystal classify";
    case Command::kSweepRun: return "sweep run";
    case Command::kPlanarityBoundary: return "planarity boundary";
    case Command::kRender: return "render";
  }
  return "?";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kStability:
    case ErrorKind::kGeometry:
    case ErrorKind::kClassification: return 2;
    case ErrorKind::kConvergence:
    case ErrorKind::kNonConfining:
    case ErrorKind::kDomain: return 3;
    case ErrorKind::kIo: return 4;
  }
  return 1;
}

int orchestrate(const RunRequest& req) {
  const Log log(req.log, req.verbose);
  Outputs out(req.config.output_dir);
  if (req.config.threads > 0) omp_set_num_threads(req.config.threads);

  auto fail = [&](const std::string& kind, const std::string& msg, int code) {
    log.info("error (", kind, "): ", msg);
    try {
      json j = {{"error", kind}, {"message", msg}, {"exit_code", code}, {"command", to_string(req.command)}};
      out.raw_write("error.json", dump(j));
    } catch (...) {
    }
    return code;
  };

  try {
    out.prepare();
    switch (req.command) {
      case Command::kFieldsSolve: cmd_fields_solve(req, out, log); break;
      case Command::kFieldsInfo: cmd_fields_info(req, out, log); break;
      case Command::kCrystalSolve: cmd_crystal_solve(req, out, log); break;
      case Command::kCrystalModes: cmd_crystal_modes(req, out, log); break;
      case Command::kCrystalClassify: cmd_crystal_classify(req, out, log); break;
      case Command::kSweepRun: cmd_sweep_run(req, out, log); break;
      case Command::kPlanarityBoundary: cmd_planarity_boundary(req, out, log); break;
      case Command::kRender: cmd_render(req, out, log); break;
    }
    out.finish();
    return 0;
  } catch (const Error& e) {
    return fail(ringtrap::to_string(e.kind()), e.what(), exit_code(e.kind()));
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
}

}  // namespace ringtrap::io
