#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "ringtrap/sha256.hpp"

namespace ringtrap {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Node labels of a rasterized trap. 0 is a free (solved) node; every other
/// value is a Dirichlet node held at its electrode's voltage.
enum class NodeLabel : std::uint8_t {
  kFree = 0,
  kSector1 = 1,  // sectors 1..8 are consecutive, counterclockwise from +X
  kSector8 = 8,
  kEndcapTop = 9,
  kEndcapBottom = 10,
  kGround = 11,
};

inline constexpr std::size_t kElectrodeCount = 10;  // 8 sectors + 2 endcaps

/// Uniform Cartesian lattice. Node (i, j, k) sits at origin + spacing * (i, j, k);
/// storage is x-fastest.
struct GridShape {
  Vec3 origin = Vec3::Zero();
  double spacing = 0.0;
  std::array<std::size_t, 3> dims{0, 0, 0};

  std::size_t size() const { return dims[0] * dims[1] * dims[2]; }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return i + dims[0] * (j + dims[1] * k);
  }
  std::size_t stride(int axis) const {
    return axis == 0 ? 1 : axis == 1 ? dims[0] : dims[0] * dims[1];
  }
  Vec3 position(std::size_t i, std::size_t j, std::size_t k) const {
    return origin + spacing * Vec3(double(i), double(j), double(k));
  }
  std::array<std::size_t, 3> coords(std::size_t idx) const {
    return {idx % dims[0], (idx / dims[0]) % dims[1], idx / (dims[0] * dims[1])};
  }
  bool same_lattice(const GridShape& other) const;
};

/// Rasterized electrode labels plus the hash of the geometry they came from.
struct ElectrodeMask {
  GridShape shape;
  std::vector<NodeLabel> labels;
  Digest geometry_hash{};

  bool is_free(std::size_t idx) const { return labels[idx] == NodeLabel::kFree; }
  std::size_t count(NodeLabel label) const;
};

/// Scalar samples on a lattice. The optional mask marks Dirichlet nodes; a grid
/// without a mask (analytic test data) treats every node as free.
struct ScalarFieldGrid {
  GridShape shape;
  std::vector<double> values;
  std::shared_ptr<const ElectrodeMask> mask;
  double achieved_residual = 0.0;

  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return values[shape.index(i, j, k)];
  }
  bool is_free(std::size_t idx) const { return !mask || mask->is_free(idx); }
  const Digest& geometry_hash() const;
};

/// Samples f on the lattice; used to build analytic test grids.
template <typename F>
ScalarFieldGrid sample_grid(const GridShape& shape, F&& f) {
  ScalarFieldGrid g;
  g.shape = shape;
  g.values.resize(shape.size());
  for (std::size_t k = 0; k < shape.dims[2]; ++k)
    for (std::size_t j = 0; j < shape.dims[1]; ++j)
      for (std::size_t i = 0; i < shape.dims[0]; ++i)
        g.values[shape.index(i, j, k)] = f(shape.position(i, j, k));
  return g;
}

}  // namespace ringtrap
