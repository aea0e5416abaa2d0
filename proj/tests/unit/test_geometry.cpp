#include <cmath>

#include <doctest.h>

#include "ringtrap/errors.hpp"
#include "ringtrap/geometry.hpp"

using namespace ringtrap;

namespace {

ElectrodeGeometry small_box() {
  ElectrodeGeometry g;
  g.bounding_box = 16e-3;
  return g;
}

NodeLabel sector(int k) { return NodeLabel(std::uint8_t(k)); }

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("defaults and invariants") {
    ElectrodeGeometry g;
    CHECK_NOTHROW(g.validate());
    CHECK(g.bore_half_angle() == doctest::Approx(M_PI / 6).epsilon(1e-14));
    CHECK(g.sector_count * g.sector_pitch_deg == 360.0);

    auto bad = g;
    bad.sector_wedge_angle_deg = 45;
    CHECK_THROWS_AS(bad.validate(), GeometryError);
    bad = g;
    bad.ring_inner_radius = 6e-3;
    CHECK_THROWS_AS(bad.validate(), GeometryError);
    bad = g;
    bad.sector_count = 9;
    CHECK_THROWS_AS(bad.validate(), GeometryError);
  }

  TEST_CASE("hash tracks every parameter") {
    const ElectrodeGeometry g;
    CHECK(g.hash() == ElectrodeGeometry{}.hash());
    auto h = g;
    h.ring_thickness = 0.6e-3;
    CHECK(h.hash() != g.hash());
    h = g;
    h.bounding_box = 41e-3;
    CHECK(h.hash() != g.hash());
  }

  TEST_CASE("electrode names") {
    CHECK(electrode_names().size() == kElectrodeCount);
    CHECK(parse_electrode("sector_1") == NodeLabel::kSector1);
    CHECK(parse_electrode("sector_8") == NodeLabel::kSector8);
    CHECK(parse_electrode("endcap_bottom") == NodeLabel::kEndcapBottom);
    CHECK_FALSE(parse_electrode("sector_9").has_value());
    CHECK_FALSE(parse_electrode("sector_0").has_value());
    for (const auto& n : electrode_names()) CHECK(electrode_name(*parse_electrode(n)) == n);
    CHECK(basis_labels("rf").size() == 2);
    CHECK_THROWS_AS(basis_labels("bogus"), ConfigError);
  }

  TEST_CASE("rasterized default geometry") {
    const ElectrodeMask m = rasterize(small_box(), 0.2e-3);
    const GridShape& s = m.shape;
    REQUIRE(s.dims[0] % 2 == 1);
    const std::size_t c = s.dims[0] / 2;
    CHECK(s.position(c, c, c).norm() < 1e-15);
    CHECK(m.is_free(s.index(c, c, c)));

    // Every sector and both endcaps are present, and the outer shell is ground.
    for (int k = 1; k <= 8; ++k) CHECK(m.count(sector(k)) > 0);
    CHECK(m.count(NodeLabel::kEndcapTop) > 0);
    CHECK(m.labels[s.index(0, c, c)] == NodeLabel::kGround);
    CHECK(m.labels[s.index(c, c, s.dims[2] - 1)] == NodeLabel::kGround);

    // Sector 1 sits on +X at mid radius.
    const auto i1 = std::size_t(std::lround(3.5e-3 / s.spacing)) + c;
    CHECK(m.labels[s.index(i1, c, c)] == NodeLabel::kSector1);

    // Endcaps mirror under z -> -z; sectors k and k+2 map under +90 degrees.
    std::size_t mirror_bad = 0, rot_bad = 0;
    const std::size_t n = s.dims[0];
    for (std::size_t kk = 0; kk < n; ++kk)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) {
          const NodeLabel a = m.labels[s.index(i, j, kk)];
          const NodeLabel b = m.labels[s.index(i, j, n - 1 - kk)];
          if ((a == NodeLabel::kEndcapTop) != (b == NodeLabel::kEndcapBottom)) ++mirror_bad;
          const NodeLabel r = m.labels[s.index(n - 1 - j, i, kk)];
          const auto ai = int(a);
          if (ai >= 1 && ai <= 8) {
            const int expect = (ai + 1) % 8 + 1;
            if (int(r) != expect) ++rot_bad;
          }
        }
    CHECK(mirror_bad == 0);
    CHECK(rot_bad == 0);

    // Odd and even sectors differ only by lattice staircase.
    const double c1 = double(m.count(sector(1))), c2 = double(m.count(sector(2)));
    CHECK(std::abs(c1 - c2) / c1 < 0.05);
  }

  TEST_CASE("rasterize rejects bad inputs") {
    CHECK_THROWS_AS(rasterize(small_box(), 0.3e-3), GeometryError);
    auto g = small_box();
    g.ring_thickness = 4e-3;  // ring reaches into the endcap cones
    CHECK_THROWS_AS(rasterize(g, 0.2e-3), GeometryError);
  }
}
