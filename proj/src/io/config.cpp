#include "ringtrap/io/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ringtrap/errors.hpp"

namespace ringtrap::io {
namespace {

using nlohmann::json;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Reads an object's keys while recording which were consumed, so leftovers
// can be reported as unknown.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& key, const std::string& what) {
    throw ConfigError("config key '" + key + "': " + what);
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  bool has(const std::string& k) const { return j_.contains(k); }

  const json* raw(const std::string& k) {
    used_.insert(k);
    auto it = j_.find(k);
    return it == j_.end() ? nullptr : &*it;
  }

  std::optional<double> number(const std::string& k) {
    const json* v = raw(k);
    if (!v) return std::nullopt;
    if (!v->is_number()) fail(key(k), "expected a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) fail(key(k), "must be finite");
    return d;
  }
  double number(const std::string& k, double fallback) { return number(k).value_or(fallback); }
  double required_number(const std::string& k) {
    auto v = number(k);
    if (!v) fail(key(k), "is required");
    return *v;
  }

  std::optional<std::uint64_t> count(const std::string& k) {
    const json* v = raw(k);
    if (!v) return std::nullopt;
    if (!v->is_number_unsigned()) fail(key(k), "expected a non-negative integer");
    return v->get<std::uint64_t>();
  }

  std::optional<bool> boolean(const std::string& k) {
    const json* v = raw(k);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) fail(key(k), "expected true or false");
    return v->get<bool>();
  }

  std::optional<std::string> string(const std::string& k) {
    const json* v = raw(k);
    if (!v) return std::nullopt;
    if (!v->is_string()) fail(key(k), "expected a string");
    return v->get<std::string>();
  }

  std::optional<Vec3> vec3(const std::string& k) {
    const json* v = raw(k);
    if (!v) return std::nullopt;
    if (!v->is_array() || v->size() != 3) fail(key(k), "expected an array of three numbers");
    Vec3 out;
    for (int a = 0; a < 3; ++a) {
      if (!(*v)[std::size_t(a)].is_number()) fail(key(k), "expected an array of three numbers");
      out[a] = (*v)[std::size_t(a)].get<double>();
    }
    return out;
  }

  std::optional<Obj> object(const std::string& k) {
    const json* v = raw(k);
    if (!v) return std::nullopt;
    return Obj(*v, key(k));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) fail(key(it.key()), "unknown key");
  }

  const json& value() const { return j_; }
  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

IonSpecies parse_species(Obj& top) {
  const json* v = top.raw("species");
  if (!v) return IonSpecies::barium138();
  if (v->is_string()) {
    const auto name = v->get<std::string>();
    if (name == "Ba138" || name == "138Ba+" || name == "Ba-138") return IonSpecies::barium138();
    Obj::fail("species", "unknown species '" + name + "' (use \"Ba138\" or an object)");
  }
  Obj o(*v, "species");
  IonSpecies s;
  s.name = o.string("name").value_or("custom");
  s.mass = o.required_number("mass_u") * constants::atomic_mass_unit;
  s.charge = o.number("charge_e", 1.0) * constants::elementary_charge;
  o.finish();
  return s;
}

std::map<std::string, double> parse_voltages(Obj& parent, const std::string& k) {
  std::map<std::string, double> out;
  const json* v = parent.raw(k);
  if (!v) return out;
  const std::string path = parent.key(k);
  if (!v->is_object()) Obj::fail(path, "expected an object of electrode voltages");
  for (auto it = v->begin(); it != v->end(); ++it) {
    const auto label = parse_electrode(it.key());
    if (!label || *label == NodeLabel::kGround)
      Obj::fail(path + "." + it.key(),
                "unknown electrode '" + it.key() +
                    "' (valid: sector_1 .. sector_8, endcap_top, endcap_bottom)");
    if (!it->is_number()) Obj::fail(path + "." + it.key(), "expected a number");
    out[it.key()] = it->get<double>();
  }
  return out;
}

ElectrodeGeometry parse_geometry(Obj o) {
  ElectrodeGeometry g;
  g.ring_inner_radius = o.number("ring_inner_radius_m", g.ring_inner_radius);
  g.ring_outer_radius = o.number("ring_outer_radius_m", g.ring_outer_radius);
  g.sector_wedge_angle_deg = o.number("sector_wedge_angle_deg", g.sector_wedge_angle_deg);
  g.sector_pitch_deg = o.number("sector_pitch_deg", g.sector_pitch_deg);
  if (auto c = o.count("sector_count")) g.sector_count = int(*c);
  g.ring_thickness = o.number("ring_thickness_m", g.ring_thickness);
  g.endcap_separation = o.number("endcap_separation_m", g.endcap_separation);
  g.endcap_numerical_aperture = o.number("endcap_numerical_aperture", g.endcap_numerical_aperture);
  g.endcap_outer_radius = o.number("endcap_outer_radius_m", g.endcap_outer_radius);
  g.endcap_length = o.number("endcap_length_m", g.endcap_length);
  g.endcap_tip_wall = o.number("endcap_tip_wall_m", g.endcap_tip_wall);
  g.endcap_outer_half_angle_deg =
      o.number("endcap_outer_half_angle_deg", g.endcap_outer_half_angle_deg);
  g.bounding_box = o.number("bounding_box_m", g.bounding_box);
  o.finish();
  try {
    g.validate();
  } catch (const GeometryError& e) {
    throw ConfigError(o.path() + ": " + e.what());
  }
  return g;
}

FieldBackend parse_field(Obj o) {
  FieldBackend f;
  if (auto g = o.object("geometry")) f.geometry = parse_geometry(std::move(*g));
  f.spacing = o.number("spacing_m", f.spacing);
  if (!(f.spacing > 0)) Obj::fail(o.key("spacing_m"), "must be positive");
  f.laplace.tolerance = o.number("solver_tolerance", f.laplace.tolerance);
  if (!(f.laplace.tolerance > 0 && f.laplace.tolerance <= 1e-3))
    Obj::fail(o.key("solver_tolerance"), "must lie in (0, 1e-3]");
  if (auto n = o.count("max_iterations")) f.laplace.max_iterations = *n;
  if (f.laplace.max_iterations == 0) Obj::fail(o.key("max_iterations"), "must be >= 1");

  auto d = o.object("drive");
  if (!d) Obj::fail(o.key("drive"), "is required for the field backend");
  f.trap.drive.rf_amplitude = d->required_number("rf_amplitude_v");
  f.trap.drive.rf_angular_frequency = kTwoPi * d->required_number("rf_frequency_hz");
  d->finish();
  try {
    f.trap.drive.validate();
  } catch (const Error& e) {
    throw ConfigError(d->path() + ": " + e.what());
  }
  f.trap.dc_voltages = parse_voltages(o, "dc_voltages_v");
  f.rf_null = o.vec3("rf_null_m");
  o.finish();
  return f;
}

HarmonicBackend parse_harmonic(Obj o) {
  HarmonicBackend h;
  h.params.omega_x = kTwoPi * o.required_number("omega_x_hz");
  h.params.omega_y = kTwoPi * o.required_number("omega_y_hz");
  h.params.omega_z = kTwoPi * o.required_number("omega_z_hz");
  h.params.rotation = o.number("rotation_deg", 0.0) * std::numbers::pi / 180.0;
  o.finish();
  try {
    h.params.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(o.path() + ": " + e.what());
  }
  return h;
}

SweepDelta parse_delta(Obj o) {
  SweepDelta d;
  if (auto w = o.vec3("omega_hz")) d.omega = kTwoPi * *w;
  d.voltages = parse_voltages(o, "dc_voltages_v");
  o.finish();
  return d;
}

SweepConfig parse_sweep(Obj o) {
  SweepConfig s;
  const json* steps = o.raw("steps");
  auto ramp = o.object("ramp");
  if (steps && ramp) Obj::fail(o.path(), "give either 'steps' or 'ramp', not both");
  if (steps) {
    if (!steps->is_array() || steps->empty())
      Obj::fail(o.key("steps"), "expected a non-empty array of step objects");
    for (std::size_t i = 0; i < steps->size(); ++i)
      s.deltas.push_back(parse_delta(Obj((*steps)[i], o.key("steps") + "[" + std::to_string(i) + "]")));
  } else if (ramp) {
    const auto points = ramp->count("points");
    if (!points || *points == 0) Obj::fail(ramp->key("points"), "must be a positive integer");
    auto delta = ramp->object("delta");
    if (!delta) Obj::fail(ramp->key("delta"), "is required");
    const SweepDelta d = parse_delta(std::move(*delta));
    ramp->finish();
    s.deltas.push_back(SweepDelta{});
    for (std::uint64_t i = 1; i < *points; ++i) s.deltas.push_back(d);
  } else {
    Obj::fail(o.path(), "needs 'steps' or 'ramp'");
  }
  s.warm_start = o.boolean("warm_start").value_or(true);
  if (auto n = o.count("fresh_restarts")) s.fresh_restarts = *n;
  s.reverse = o.boolean("reverse").value_or(false);
  o.finish();
  return s;
}

Projection parse_projection(const std::string& key, const std::string& s) {
  if (s == "XY" || s == "xy") return Projection::kXY;
  if (s == "XZ" || s == "xz") return Projection::kXZ;
  if (s == "YZ" || s == "yz") return Projection::kYZ;
  Obj::fail(key, "projection must be XY, XZ or YZ");
}

std::string location(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

const char* to_string(Projection p) {
  switch (p) {
    case Projection::kXY: return "XY";
    case Projection::kXZ: return "XZ";
    case Projection::kYZ: return "YZ";
  }
  return "?";
}

void RenderSpec::validate() const {
  if (!(marker_radius > 0)) throw ConfigError("render: marker radius must be positive");
  if (!(scale_bar > 0)) throw ConfigError("render: scale bar must be positive");
  if (width <= 0 || height <= 0) throw ConfigError("render: canvas size must be positive");
  if (!(pixels_per_meter >= 0)) throw ConfigError("render: pixels_per_meter must be >= 0");
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::string msg = e.what();
    const auto colon = msg.find(": ", msg.find("parse error"));
    throw ConfigError(source + ": JSON syntax error at " + location(text, e.byte == 0 ? 0 : e.byte - 1) +
                      (colon == std::string::npos ? "" : ": " + msg.substr(colon + 2)));
  }
  if (!j.is_object()) throw ConfigError(source + ": top level must be a JSON object");

  Obj top(j, "");
  RunConfig cfg;
  cfg.species = parse_species(top);
  try {
    cfg.species.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("species: ") + e.what());
  }

  const bool has_h = top.has("harmonic"), has_f = top.has("field");
  if (has_h && has_f)
    throw ConfigError("conflicting backends: give either 'harmonic' or 'field', not both");
  if (!has_h && !has_f) throw ConfigError("no potential backend: add a 'harmonic' or 'field' section");
  if (has_h)
    cfg.backend = parse_harmonic(*top.object("harmonic"));
  else
    cfg.backend = parse_field(*top.object("field"));

  const auto n = top.count("n_ions");
  if (!n) Obj::fail("n_ions", "is required");
  if (*n == 0) Obj::fail("n_ions", "must be >= 1");
  cfg.n_ions = *n;
  cfg.seed = top.count("seed").value_or(0);
  if (auto t = top.count("threads")) cfg.threads = int(*t);
  if (auto s = top.string("output_dir")) cfg.output_dir = *s;
  if (auto s = top.string("cache_dir")) cfg.cache_dir = *s;

  if (auto o = top.object("solver")) {
    if (auto v = o->count("restarts")) cfg.solver.restarts = *v;
    if (auto v = o->count("max_iterations")) cfg.solver.max_iterations = *v;
    cfg.solver.force_tolerance = o->number("force_tolerance", cfg.solver.force_tolerance);
    cfg.solver.init_radius_scale = o->number("init_radius_scale", cfg.solver.init_radius_scale);
    o->finish();
    try {
      cfg.solver.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("solver: ") + e.what());
    }
  }

  if (auto o = top.object("structure")) {
    cfg.structure.eta = o->number("eta", cfg.structure.eta);
    cfg.structure.shell_gap_factor = o->number("shell_gap_factor", cfg.structure.shell_gap_factor);
    cfg.structure.zigzag_fraction = o->number("zigzag_fraction", cfg.structure.zigzag_fraction);
    cfg.structure.zigzag_max_amplitude =
        o->number("zigzag_max_amplitude", cfg.structure.zigzag_max_amplitude);
    o->finish();
    cfg.structure.validate();
  }

  if (auto o = top.object("micromotion")) {
    cfg.micromotion.q_r = o->number("q_r");
    cfg.micromotion.rf_null = o->vec3("rf_null_m");
    o->finish();
    if (!cfg.harmonic())
      throw ConfigError("micromotion: q_r and rf_null_m are derived from the field backend; "
                        "use field.rf_null_m to override the null");
    if (cfg.micromotion.q_r) {
      try {
        check_mathieu_stability(*cfg.micromotion.q_r);
      } catch (const Error& e) {
        throw ConfigError(std::string("micromotion.q_r: ") + e.what());
      }
      if (*cfg.micromotion.q_r < 0) Obj::fail("micromotion.q_r", "must be >= 0");
    }
  }

  if (auto o = top.object("sweep")) cfg.sweep = parse_sweep(std::move(*o));

  if (auto o = top.object("planarity")) {
    const json* ns = o->raw("n_ions");
    if (ns) {
      const json arr = ns->is_array() ? *ns : json::array({*ns});
      for (const auto& v : arr) {
        if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0)
          Obj::fail("planarity.n_ions", "expected positive integers");
        cfg.planarity.n_ions.push_back(v.get<std::size_t>());
      }
    }
    cfg.planarity.alpha_min = o->number("alpha_min", cfg.planarity.alpha_min);
    cfg.planarity.alpha_max = o->number("alpha_max", cfg.planarity.alpha_max);
    cfg.planarity.tolerance = o->number("tolerance", cfg.planarity.tolerance);
    o->finish();
    if (!(cfg.planarity.alpha_min > 0 && cfg.planarity.alpha_max > cfg.planarity.alpha_min))
      throw ConfigError("planarity: need 0 < alpha_min < alpha_max");
    if (!(cfg.planarity.tolerance > 0)) Obj::fail("planarity.tolerance", "must be positive");
  }

  if (auto o = top.object("render")) {
    if (auto p = o->string("projection")) cfg.render.projection = parse_projection("render.projection", *p);
    cfg.render.marker_radius = o->number("marker_radius_m", cfg.render.marker_radius);
    cfg.render.scale_bar = o->number("scale_bar_m", cfg.render.scale_bar);
    if (auto v = o->count("width_px")) cfg.render.width = int(*v);
    if (auto v = o->count("height_px")) cfg.render.height = int(*v);
    cfg.render.pixels_per_meter = o->number("pixels_per_meter", cfg.render.pixels_per_meter);
    o->finish();
    cfg.render.validate();
  }

  top.finish();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

}  // namespace ringtrap::io
