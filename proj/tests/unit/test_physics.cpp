#include <cmath>

#include <doctest.h>

#include "ringtrap/errors.hpp"
#include "ringtrap/physics.hpp"

using namespace ringtrap;

namespace {
// Independent evaluation of the planarity guideline.
double alpha_crit(double n) { return std::pow(96.0 * n / (std::pow(M_PI, 3) * std::pow(1.11, 3)), 0.25); }
}  // namespace

TEST_SUITE("physics") {
  TEST_CASE("critical aspect ratio values") {
    CHECK(critical_aspect_ratio(30) == doctest::Approx(2.871).epsilon(0.0004));
    CHECK(critical_aspect_ratio(1) == doctest::Approx(1.227).epsilon(0.0004));
    CHECK(critical_aspect_ratio(127) == doctest::Approx(4.118).epsilon(0.0003));
    for (std::size_t n : {1u, 7u, 29u, 30u, 500u})
      CHECK(critical_aspect_ratio(n) == doctest::Approx(alpha_crit(double(n))).epsilon(1e-14));
  }

  TEST_CASE("critical aspect ratio is increasing and scales as N^(1/4)") {
    double prev = 0;
    for (std::size_t n = 1; n < 300; ++n) {
      const double a = critical_aspect_ratio(n);
      CHECK(a > prev);
      prev = a;
    }
    for (std::size_t n : {1u, 3u, 10u, 64u})
      CHECK(std::abs(critical_aspect_ratio(16 * n) / critical_aspect_ratio(n) - 2.0) < 1e-12);
    CHECK_THROWS_AS(critical_aspect_ratio(0), ConfigError);
  }

  TEST_CASE("micromotion amplitude") {
    CHECK(micromotion_amplitude(0.102, 1e-6) == doctest::Approx(0.051e-6).epsilon(1e-14));
    CHECK(micromotion_amplitude(0.102, 0.0) == 0.0);
    CHECK(micromotion_amplitude(0.102, 54e-6) == doctest::Approx(2.754e-6).epsilon(1e-12));
    CHECK(std::abs(micromotion_amplitude(0.102, 54e-6) / 2.8e-6 - 1) < 0.02);
    for (double a : {0.0, 0.5, 3.0, 17.25})
      CHECK(micromotion_amplitude(0.3, a * 2e-6) == a * micromotion_amplitude(0.3, 2e-6));
    CHECK_THROWS_AS(micromotion_amplitude(0.908, 1e-6), StabilityError);
    CHECK_THROWS_AS(micromotion_amplitude(-0.01, 1e-6), StabilityError);
    CHECK_THROWS_AS(micromotion_amplitude(0.1, -1e-6), ConfigError);
    try {
      micromotion_amplitude(1.2, 1e-6);
    } catch (const StabilityError& e) {
      CHECK(e.q() == 1.2);
    }
  }

  TEST_CASE("species") {
    const IonSpecies ba = IonSpecies::barium138();
    CHECK(ba.mass == doctest::Approx(137.9052 * 1.66053906660e-27).epsilon(1e-15));
    CHECK(ba.charge == 1.602176634e-19);
    CHECK_NOTHROW(ba.validate());
    IonSpecies bad = ba;
    bad.charge = 1.5 * constants::elementary_charge;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = ba;
    bad.mass = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = ba;
    bad.charge = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }

  TEST_CASE("Mathieu q and pseudopotential frequency") {
    const IonSpecies ba = IonSpecies::barium138();
    const DriveParameters d{1000.0, 2 * M_PI * 12.47e6};
    // Invert the definition for q = 0.102.
    const double c = 0.102 * ba.mass * d.rf_angular_frequency * d.rf_angular_frequency /
                     (2 * ba.charge * d.rf_amplitude);
    CHECK(mathieu_q(c, d, ba) == doctest::Approx(0.102).epsilon(1e-14));
    CHECK(mathieu_q(-c, d, ba) == doctest::Approx(-0.102).epsilon(1e-14));
    CHECK(mathieu_q(c, DriveParameters{0.0, d.rf_angular_frequency}, ba) == 0.0);

    CHECK(pseudo_secular_frequency(0.102, d) / (2 * M_PI) == doctest::Approx(449.7e3).epsilon(1e-4));
    CHECK(pseudo_secular_frequency(0.0, d) == 0.0);
    CHECK(pseudo_secular_frequency(0.2, DriveParameters{1.0, 2 * M_PI * 10e6}) / (2 * M_PI) ==
          doctest::Approx(707.1e3).epsilon(1e-4));
    CHECK_THROWS_AS(pseudo_secular_frequency(0.95, d), StabilityError);

    // Composition: w = e V c / (sqrt2 m Omega).
    for (double cc : {1e3, 2.5e5, 7e5}) {
      const double w = pseudo_secular_frequency(mathieu_q(cc, d, ba), d);
      const double expect = ba.charge * d.rf_amplitude * cc / (std::sqrt(2.0) * ba.mass * d.rf_angular_frequency);
      CHECK(w == doctest::Approx(expect).epsilon(1e-14));
    }
  }

  TEST_CASE("drive validation") {
    CHECK_THROWS_AS((DriveParameters{-1.0, 1e6}.validate()), ConfigError);
    CHECK_THROWS_AS((DriveParameters{1.0, 0.0}.validate()), ConfigError);
    CHECK_NOTHROW((DriveParameters{0.0, 1e6}.validate()));
  }
}
