#include <random>

#include <doctest.h>

#include "ringtrap/errors.hpp"
#include "ringtrap/interpolation.hpp"

using namespace ringtrap;

namespace {

GridShape cube(std::size_t n, double h) {
  GridShape s;
  s.spacing = h;
  s.dims = {n, n, n};
  s.origin = Vec3::Constant(-0.5 * h * double(n - 1));
  return s;
}

}  // namespace

TEST_SUITE("interpolation") {
  TEST_CASE("hessian is continuous across cell faces") {
    auto f = [](const Vec3& r) { return std::exp(r.x()) * std::sin(2 * r.y()) + std::cos(r.z() * r.x()); };
    const GridInterpolator interp(std::make_shared<const ScalarFieldGrid>(sample_grid(cube(12, 0.1), f)));
    const double face = cube(12, 0.1).origin.x() + 0.6;
    for (double y : {-0.13, 0.02, 0.21}) {
      const auto lo = interp.evaluate(Vec3(face - 1e-12, y, 0.07));
      const auto hi = interp.evaluate(Vec3(face + 1e-12, y, 0.07));
      CHECK((lo.hessian - hi.hessian).norm() < 1e-8 * lo.hessian.norm());
    }
  }

  TEST_CASE("second derivatives at nodes are the five-point values") {
    auto f = [](const Vec3& r) { return std::exp(r.x()) * std::sin(2 * r.y()) + std::pow(r.z(), 4); };
    const auto g = std::make_shared<const ScalarFieldGrid>(sample_grid(cube(12, 0.1), f));
    const GridInterpolator interp(g);
    const std::size_t i = 5, j = 6, k = 5;
    auto d2 = [&](int a) {
      auto at = [&](int o) {
        std::array<std::size_t, 3> n{i, j, k};
        n[a] = std::size_t(std::ptrdiff_t(n[a]) + o);
        return g->at(n[0], n[1], n[2]);
      };
      return (-at(-2) + 16 * at(-1) - 30 * at(0) + 16 * at(1) - at(2)) / (12 * 0.01);
    };
    const Mat3 h = interp.evaluate(g->shape.position(i, j, k)).hessian;
    for (int a = 0; a < 3; ++a) CHECK(h(a, a) == doctest::Approx(d2(a)).epsilon(1e-12));
  }

  TEST_CASE("quadratics are reproduced with exact derivatives") {
    const Mat3 a = (Mat3() << 3, 0.5, -1, 0.5, 2, 0.25, -1, 0.25, 7).finished();
    const Vec3 b(0.3, -0.2, 0.1);
    auto f = [&](const Vec3& r) { return 0.5 * r.dot(a * r) + b.dot(r) + 1.5; };
    const GridInterpolator interp(std::make_shared<const ScalarFieldGrid>(sample_grid(cube(12, 0.1), f)));

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.35, 0.35);
    for (int t = 0; t < 200; ++t) {
      const Vec3 r(u(rng), u(rng), u(rng));
      REQUIRE(interp.contains(r));
      const auto s = interp.evaluate(r);
      CHECK(s.value == doctest::Approx(f(r)).epsilon(1e-12));
      CHECK((s.gradient - (a * r + b)).norm() < 1e-11);
      CHECK((s.hessian - a).norm() < 1e-10);
      CHECK(interp.value(r) == s.value);
    }
  }

  TEST_CASE("nodes are reproduced") {
    auto f = [](const Vec3& r) { return std::sin(3 * r.x()) * std::cos(2 * r.y()) + r.z() * r.z() * r.z(); };
    const auto g = std::make_shared<const ScalarFieldGrid>(sample_grid(cube(9, 0.1), f));
    const GridInterpolator interp(g);
    for (std::size_t k = 2; k < 7; ++k)
      for (std::size_t j = 2; j < 7; ++j)
        for (std::size_t i = 2; i < 7; ++i)
          CHECK(interp.value(g->shape.position(i, j, k)) == doctest::Approx(g->at(i, j, k)).epsilon(1e-12));
  }

  TEST_CASE("outside the stencil domain") {
    const auto g = std::make_shared<const ScalarFieldGrid>(sample_grid(cube(8, 1.0), [](const Vec3&) { return 1.0; }));
    const GridInterpolator interp(g);
    CHECK(interp.contains(Vec3::Zero()));
    CHECK(interp.contains(Vec3(3.4, 0, 0)));
    CHECK_FALSE(interp.contains(Vec3(3.6, 0, 0)));
    CHECK_FALSE(interp.contains(Vec3(0, 0, -10)));
    CHECK_THROWS_AS(interp.evaluate(Vec3(3.6, 0, 0)), DomainError);
  }

  TEST_CASE("cells touching a masked node are outside") {
    GridShape s = cube(8, 1.0);
    auto mask = std::make_shared<ElectrodeMask>();
    mask->shape = s;
    mask->labels.assign(s.size(), NodeLabel::kFree);
    mask->labels[s.index(5, 3, 3)] = NodeLabel::kGround;
    auto g = std::make_shared<ScalarFieldGrid>(sample_grid(s, [](const Vec3& r) { return r.squaredNorm(); }));
    g->mask = mask;
    const GridInterpolator interp(g);
    const Vec3 node = s.position(5, 3, 3);
    CHECK_FALSE(interp.contains(node + Vec3(0.5, 0.5, 0.5)));
    CHECK_FALSE(interp.contains(node - Vec3(0.5, 0.5, 0.5)));
    CHECK(interp.contains(node - Vec3(1.5, 0.5, 0.5)));
    // Narrower stencils next to the masked node still reproduce the quadratic.
    const Vec3 r = node - Vec3(1.3, 0.4, 0.2);
    CHECK(interp.value(r) == doctest::Approx(r.squaredNorm()).epsilon(1e-12));
    CHECK((interp.evaluate(r).gradient - 2 * r).norm() < 1e-11);
  }
}
