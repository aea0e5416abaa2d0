#pragma once

#include <string>

#include "ringtrap/crystal.hpp"
#include "ringtrap/io/config.hpp"

namespace ringtrap::io {

struct RenderedSvg {
  std::string svg;
  double pixels_per_meter = 0.0;
  double center_u = 0.0, center_v = 0.0;  // projected point drawn at the canvas center (m)
};

/// One filled circle per ion in the chosen projection plus a labelled scale
/// bar. Identical inputs give identical bytes. Throws ConfigError for an empty
/// state.
RenderedSvg render_crystal(const Positions& positions, const RenderSpec& spec);

}  // namespace ringtrap::io
