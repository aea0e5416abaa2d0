#include "ringtrap/grid.hpp"

#include <algorithm>

namespace ringtrap {

bool GridShape::same_lattice(const GridShape& other) const {
  return dims == other.dims && spacing == other.spacing && origin == other.origin;
}

std::size_t ElectrodeMask::count(NodeLabel label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

const Digest& ScalarFieldGrid::geometry_hash() const {
  static const Digest kNone{};
  return mask ? mask->geometry_hash : kNone;
}

}  // namespace ringtrap
