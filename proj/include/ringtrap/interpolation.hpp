#pragma once

#include <memory>

#include "ringtrap/grid.hpp"

namespace ringtrap {

/// Tensor-product quintic Hermite interpolation of a grid. Every node carries
/// its own value plus first and second (and mixed) derivatives, estimated by
/// five-point differences where the neighbours are free and by three-point
/// central or one-sided differences next to electrodes. Because each node has a
/// single set of data the interpolant is C2 everywhere, and its second
/// derivatives at a node equal the five-point stencil values. Quadratics are
/// reproduced exactly; gradient and Hessian are exact derivatives of the
/// piecewise polynomial.
class GridInterpolator {
 public:
  struct Sample {
    double value = 0.0;
    Vec3 gradient = Vec3::Zero();
    Mat3 hessian = Mat3::Zero();
  };

  explicit GridInterpolator(std::shared_ptr<const ScalarFieldGrid> grid);

  /// True when r lies in a cell whose corners are free nodes with derivative data.
  bool contains(const Vec3& r) const;
  /// Throws DomainError outside `contains`.
  Sample evaluate(const Vec3& r) const;
  double value(const Vec3& r) const;

  const ScalarFieldGrid& grid() const { return *grid_; }

 private:
  struct CellData;
  bool gather(const Vec3& r, CellData& data) const;

  std::shared_ptr<const ScalarFieldGrid> grid_;
};

}  // namespace ringtrap
