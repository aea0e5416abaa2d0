#include "ringtrap/io/render.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

#include "ringtrap/errors.hpp"

namespace ringtrap::io {
namespace {

std::pair<double, double> project(const Vec3& r, Projection p) {
  switch (p) {
    case Projection::kXY: return {r.x(), r.y()};
    case Projection::kXZ: return {r.x(), r.z()};
    case Projection::kYZ: return {r.y(), r.z()};
  }
  return {r.x(), r.y()};
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

RenderedSvg render_crystal(const Positions& positions, const RenderSpec& spec) {
  spec.validate();
  if (positions.empty()) throw ConfigError("render: crystal state has no ions");

  double umin = std::numeric_limits<double>::infinity(), umax = -umin;
  double vmin = umin, vmax = -umin;
  for (const auto& r : positions) {
    const auto [u, v] = project(r, spec.projection);
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }

  RenderedSvg out;
  out.center_u = 0.5 * (umin + umax);
  out.center_v = 0.5 * (vmin + vmax);
  const double w = spec.width, h = spec.height;
  double ppm = spec.pixels_per_meter;
  if (ppm == 0.0) {
    const double du = umax - umin + 2 * spec.marker_radius;
    const double dv = vmax - vmin + 2 * spec.marker_radius;
    ppm = std::min(0.8 * w / du, 0.8 * h / dv);
    // Keep the scale bar on the canvas.
    ppm = std::min(ppm, 0.4 * w / spec.scale_bar);
  }
  out.pixels_per_meter = ppm;

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(spec.width) +
       "\" height=\"" + std::to_string(spec.height) + "\" viewBox=\"0 0 " +
       std::to_string(spec.width) + " " + std::to_string(spec.height) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(spec.width) + "\" height=\"" +
       std::to_string(spec.height) + "\" fill=\"#000000\"/>\n";
  const std::string r = fmt("%.3f", spec.marker_radius * ppm);
  for (const auto& p : positions) {
    const auto [u, v] = project(p, spec.projection);
    const double cx = 0.5 * w + (u - out.center_u) * ppm;
    const double cy = 0.5 * h - (v - out.center_v) * ppm;  // SVG y points down
    s += "<circle cx=\"" + fmt("%.3f", cx) + "\" cy=\"" + fmt("%.3f", cy) + "\" r=\"" + r +
         "\" fill=\"#bfe6ff\"/>\n";
  }

  const double bar = spec.scale_bar * ppm;
  const double x0 = 0.05 * w, y0 = 0.92 * h;
  s += "<line x1=\"" + fmt("%.3f", x0) + "\" y1=\"" + fmt("%.3f", y0) + "\" x2=\"" +
       fmt("%.3f", x0 + bar) + "\" y2=\"" + fmt("%.3f", y0) +
       "\" stroke=\"#ffffff\" stroke-width=\"3\"/>\n";
  s += "<text x=\"" + fmt("%.3f", x0) + "\" y=\"" + fmt("%.3f", y0 - 8) +
       "\" fill=\"#ffffff\" font-family=\"sans-serif\" font-size=\"14\">" +
       fmt("%g", spec.scale_bar * 1e6) + " &#956;m</text>\n";
  s += "<text x=\"" + fmt("%.3f", w - 8) + "\" y=\"20\" fill=\"#ffffff\" font-family=\"sans-serif\" "
       "font-size=\"14\" text-anchor=\"end\">" + to_string(spec.projection) + "</text>\n";
  s += "</svg>\n";
  out.svg = std::move(s);
  return out;
}

}  // namespace ringtrap::io
