#include "ringtrap/io/serialize.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ringtrap/errors.hpp"

namespace ringtrap::io {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

json hz(const Vec3& omega) { return to_json(Vec3(omega / kTwoPi)); }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json to_json(const Positions& p) {
  json a = json::array();
  for (const auto& r : p) a.push_back(to_json(r));
  return a;
}

json to_json(const CrystalState& s) {
  return {
      {"n_ions", s.n_ions},
      {"positions_m", to_json(s.positions)},
      {"total_energy_j", s.total_energy},
      {"max_residual_force_n", s.max_residual_force},
      {"converged", s.converged},
      {"seed", s.seed},
      {"restarts_used", s.restarts_used},
      {"best_start", s.best_start},
  };
}

json to_json(const StructureReport& r) {
  json j = {
      {"category", to_string(r.category)},
      {"planar_family", r.planar_family},
      {"shell_occupancies", r.shell_occupancies},
      {"nn_spacing_m", {{"min", r.spacing.min}, {"mean", r.spacing.mean}, {"max", r.spacing.max}}},
      {"planar_extent_m", json::array({r.extent_major, r.extent_minor})},
      {"long_axis_angle_rad", r.long_axis_angle},
      {"max_abs_z_m", r.max_abs_z},
  };
  if (!r.micromotion.empty()) j["micromotion_amplitude_m"] = r.micromotion;
  return j;
}

json to_json(const MicromotionMap& m) {
  return {{"q_r", m.q_r},
          {"rf_null_m", to_json(m.rf_null)},
          {"amplitude_m", m.amplitudes},
          {"excursion_m", to_json(m.excursions)}};
}

json to_json(const ModeSpectrum& m) {
  json freqs = json::array(), w2 = json::array(), vecs = json::array();
  for (Eigen::Index i = 0; i < m.frequencies.size(); ++i) {
    freqs.push_back(m.frequencies[i] / kTwoPi);
    w2.push_back(m.omega_squared[i]);
    json col = json::array();
    for (Eigen::Index k = 0; k < m.eigenvectors.rows(); ++k) col.push_back(m.eigenvectors(k, i));
    vecs.push_back(std::move(col));
  }
  json zero = json::array();
  for (Eigen::Index i = 0; i < m.omega_squared.size(); ++i)
    if (m.is_zero_mode(i)) zero.push_back(i);
  return {{"frequencies_hz", freqs},
          {"omega_squared_rad2_s2", w2},
          {"zero_modes", zero},
          {"unstable_mode_count", m.unstable_mode_count()},
          {"reference_omega_r_hz", m.reference_omega / kTwoPi},
          {"eigenvectors", vecs}};
}

json to_json(const SecularFrequencies& s) {
  json axes = json::array();
  for (int a = 0; a < 3; ++a) axes.push_back(to_json(Vec3(s.axes.col(a))));
  return {{"frequencies_hz", hz(s.omega)},
          {"principal_axes", axes},
          {"minimum_m", to_json(s.minimum)},
          {"omega_r_hz", s.omega_r() / kTwoPi}};
}

json to_json(const SweepPoint& p) {
  if (const auto* h = std::get_if<HarmonicParameters>(&p))
    return {{"omega_x_hz", h->omega_x / kTwoPi},
            {"omega_y_hz", h->omega_y / kTwoPi},
            {"omega_z_hz", h->omega_z / kTwoPi},
            {"rotation_deg", h->rotation * 180.0 / std::numbers::pi}};
  const auto& t = std::get<TrapConfiguration>(p);
  json v = json::object();
  for (const auto& [name, volts] : t.dc_voltages) v[name] = volts;
  return {{"rf_amplitude_v", t.drive.rf_amplitude},
          {"rf_frequency_hz", t.drive.rf_angular_frequency / kTwoPi},
          {"dc_voltages_v", v}};
}

json to_json(const RfAnalysis& a) {
  return {{"alpha", a.alpha},
          {"null_node_position_m", to_json(a.pseudo.position)},
          {"pseudopotential_curvature_j_m2", to_json(a.pseudo.curvature)},
          {"rf_basis_curvature_1_m2", to_json(a.rf_curvature)},
          {"mathieu_q", to_json(a.q)},
          {"q_r", a.q_r},
          {"secular_frequency_from_q_hz", hz(a.pseudo_frequency)},
          {"secular_frequency_from_curvature_hz", hz(a.curvature_frequency)}};
}

json to_json(const SymmetryCheck& c) {
  return {{"mirror_z", c.mirror_z}, {"rotate_90", c.rotate_90}, {"rotate_45", c.rotate_45}};
}

CrystalState state_from_json(const json& j) {
  try {
    CrystalState s;
    for (const auto& p : j.at("positions_m")) {
      if (!p.is_array() || p.size() != 3) throw ConfigError("state: positions must be [x, y, z]");
      s.positions.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    }
    s.n_ions = j.value("n_ions", s.positions.size());
    if (s.n_ions != s.positions.size()) throw ConfigError("state: n_ions does not match positions");
    s.total_energy = j.value("total_energy_j", 0.0);
    s.max_residual_force = j.value("max_residual_force_n", 0.0);
    s.converged = j.value("converged", false);
    s.seed = j.value("seed", std::uint64_t{0});
    s.restarts_used = j.value("restarts_used", std::size_t{0});
    s.best_start = j.value("best_start", std::size_t{0});
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("state: ") + e.what());
  }
}

CrystalState load_state(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read state file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return state_from_json(j);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string spacing_csv(const StructureReport& r) {
  std::string out = "ion_index,nn_distance_m\n";
  for (std::size_t i = 0; i < r.spacing.per_ion.size(); ++i)
    out += std::to_string(i) + "," + format_double(r.spacing.per_ion[i]) + "\n";
  return out;
}

}  // namespace ringtrap::io
