#include <cmath>
#include <filesystem>

#include <doctest.h>

#include "ringtrap/errors.hpp"
#include "ringtrap/laplace.hpp"
#include "support/oracles.hpp"

using namespace ringtrap;
using oracle::CoarseField;

namespace {

// Box whose side walls carry the exact linear profile V = k / 10 on layer k,
// with plates at k = 0 and k = 10. The solution is linear in z.
std::shared_ptr<const ElectrodeMask> plate_mask(std::size_t n) {
  ElectrodeMask m;
  m.shape.spacing = 1e-4;
  m.shape.dims = {n, n, 11};
  m.labels.assign(m.shape.size(), NodeLabel::kFree);
  for (std::size_t k = 0; k < 11; ++k)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) {
        const bool wall = i == 0 || j == 0 || i == n - 1 || j == n - 1 || k == 0 || k == 10;
        if (wall) m.labels[m.shape.index(i, j, k)] = NodeLabel(std::uint8_t(k + 1));
      }
  return std::make_shared<const ElectrodeMask>(std::move(m));
}

}  // namespace

TEST_SUITE("laplace") {
  TEST_CASE("parallel plates give a linear potential") {
    const auto mask = plate_mask(9);
    LaplaceOptions o;
    o.tolerance = 1e-8;
    const auto g = solve_dirichlet(mask, [](NodeLabel l) { return (double(l) - 1) / 10.0; }, o);
    double worst = 0;
    for (std::size_t idx = 0; idx < g.values.size(); ++idx) {
      const auto c = g.shape.coords(idx);
      worst = std::max(worst, std::abs(g.values[idx] - double(c[2]) / 10.0));
    }
    CHECK(worst < 10 * o.tolerance);
    CHECK(g.achieved_residual < o.tolerance);
    CHECK(laplace_residual(g) < o.tolerance);
  }

  TEST_CASE("tolerance range and non-convergence") {
    const auto mask = plate_mask(9);
    LaplaceOptions o;
    o.tolerance = 2e-3;
    CHECK_THROWS_AS(solve_basis(mask, "endcap_top", o), ConfigError);
    o.tolerance = 0;
    CHECK_THROWS_AS(solve_basis(mask, "endcap_top", o), ConfigError);
    o.tolerance = 1e-12;
    o.max_iterations = 3;
    o.check_interval = 1;
    try {
      solve_dirichlet(mask, [](NodeLabel l) { return (double(l) - 1) / 10.0; }, o);
      FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
      CHECK(e.residual() > o.tolerance);
    }
  }

  // The solve bounds the residual, not the error, so the bounds carry a factor of 10.
  TEST_CASE("basis bounds and boundary values") {
    const auto g = CoarseField::basis("sector_1");
    const auto& m = *CoarseField::mask();
    double lo = 1, hi = 0;
    for (std::size_t i = 0; i < g->values.size(); ++i) {
      if (m.is_free(i)) {
        lo = std::min(lo, g->values[i]);
        hi = std::max(hi, g->values[i]);
      } else {
        CHECK(g->values[i] == (m.labels[i] == NodeLabel::kSector1 ? 1.0 : 0.0));
      }
    }
    CHECK(lo >= -10 * CoarseField::kTolerance);
    CHECK(hi <= 1 + 10 * CoarseField::kTolerance);
    CHECK(g->achieved_residual < CoarseField::kTolerance);
  }

  TEST_CASE("partition of unity") {
    const auto& m = *CoarseField::mask();
    std::vector<double> sum(m.labels.size(), 0.0);
    std::vector<std::string> ids(electrode_names());
    ids.push_back("ground");
    for (const auto& id : ids) {
      const auto g = CoarseField::basis(id);
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += g->values[i];
    }
    double worst = 0;
    for (std::size_t i = 0; i < sum.size(); ++i) worst = std::max(worst, std::abs(sum[i] - 1));
    CHECK(worst < 10 * CoarseField::kTolerance);
  }

  TEST_CASE("RF basis is the sum of the endcap bases") {
    const auto rf = CoarseField::basis("rf");
    const auto t = CoarseField::basis("endcap_top");
    const auto b = CoarseField::basis("endcap_bottom");
    double worst = 0;
    for (std::size_t i = 0; i < rf->values.size(); ++i)
      worst = std::max(worst, std::abs(rf->values[i] - t->values[i] - b->values[i]));
    CHECK(worst < 10 * CoarseField::kTolerance);
  }

  TEST_CASE("sector bases map onto each other under 90 degree rotation") {
    const auto s1 = CoarseField::basis("sector_1");
    const auto s3 = CoarseField::basis("sector_3");
    const GridShape& s = s1->shape;
    const std::size_t n = s.dims[0];
    double worst = 0;
    for (std::size_t k = 0; k < s.dims[2]; ++k)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
          worst = std::max(worst, std::abs(s1->at(i, j, k) - s3->at(n - 1 - j, i, k)));
    CHECK(worst < 10 * CoarseField::kTolerance);
  }

  TEST_CASE("results do not depend on the thread count") {
    const auto mask = plate_mask(13);
    LaplaceOptions a, b;
    a.tolerance = b.tolerance = 1e-7;
    a.threads = 1;
    b.threads = 3;
    auto f = [](NodeLabel l) { return std::sin(double(l)); };
    CHECK(solve_dirichlet(mask, f, a).values == solve_dirichlet(mask, f, b).values);
  }

  TEST_CASE("basis cache") {
    const auto dir = std::filesystem::temp_directory_path() / "ringtrap_cache_test";
    std::filesystem::remove_all(dir);
    const BasisCache cache(dir);
    const auto mask = CoarseField::mask();
    LaplaceOptions o = CoarseField::options();

    BasisOrigin first, second;
    const auto a = obtain_basis(mask, "sector_2", o, &cache, &first);
    const auto b = obtain_basis(mask, "sector_2", o, &cache, &second);
    CHECK_FALSE(first.cache_hit);
    CHECK(second.cache_hit);
    CHECK(a.values == b.values);

    // The stored residual does not meet a stricter tolerance.
    CHECK_FALSE(cache.load(mask, "sector_2", 1e-12).has_value());
    // Another electrode id, another lattice, another geometry: all misses.
    CHECK_FALSE(cache.load(mask, "sector_3", o.tolerance).has_value());
    auto other = CoarseField::geometry();
    other.ring_thickness = 0.6e-3;
    const auto mask2 = std::make_shared<const ElectrodeMask>(rasterize(other, CoarseField::kSpacing));
    CHECK_FALSE(cache.load(mask2, "sector_2", o.tolerance).has_value());
    CHECK(cache.path_for(*mask, "sector_2", o.tolerance) != cache.path_for(*mask2, "sector_2", o.tolerance));

    // A corrupted file is never reused.
    const auto p = cache.path_for(*mask, "sector_2", o.tolerance);
    std::filesystem::resize_file(p, std::filesystem::file_size(p) / 2);
    CHECK_FALSE(cache.load(mask, "sector_2", o.tolerance).has_value());

    // Header round trip.
    cache.store(a, "sector_2", o.tolerance);
    Digest h{};
    const auto r = read_grid_file(p, &h);
    CHECK(h == mask->geometry_hash);
    CHECK(r.shape.same_lattice(mask->shape));
    CHECK(r.achieved_residual == a.achieved_residual);
    std::filesystem::remove_all(dir);
  }
}
