#include "doctest.h"

#include <cmath>

#include "forestseg/rng.hpp"
#include "forestseg/spectral.hpp"

using namespace forestseg;

namespace {

MultispectralCloud two_class_cloud(double a_center, double b_center, double jitter,
                                   std::size_t per_class, std::uint64_t seed) {
  // Classes differ only in NIR so ndvi-style indices separate them.
  Rng rng(seed);
  MultispectralCloud cloud;
  auto add = [&](SemanticClass cls, double nir_db) {
    MultispectralPoint p;
    p.label = cls;
    p.set_reflectance(Channel::Swir, -10.0);
    p.set_reflectance(Channel::Green, -10.0);
    p.set_reflectance(Channel::Nir, nir_db + jitter * rng.next_normal());
    cloud.points.push_back(p);
  };
  for (std::size_t i = 0; i < per_class; ++i) add(SemanticClass::Ground, a_center);
  for (std::size_t i = 0; i < per_class; ++i) add(SemanticClass::Foliage, b_center);
  return cloud;
}

}  // namespace

TEST_CASE("db_to_linear fixed points") {
  CHECK(db_to_linear(0.0) == doctest::Approx(1.0));
  CHECK(db_to_linear(10.0) == doctest::Approx(10.0));
  CHECK(std::abs(db_to_linear(-3.0103) - 0.5) <= 1e-4);
  CHECK_THROWS_AS(db_to_linear(std::nan("")), ValidationError);
  CHECK_THROWS_AS(db_to_linear(INFINITY), ValidationError);
}

TEST_CASE("db_to_linear is a log-domain homomorphism") {
  Rng rng(5);
  for (int i = 0; i < 20000; ++i) {
    const double a = rng.next_uniform(-40.0, 10.0);
    const double b = rng.next_uniform(-40.0, 10.0);
    const double lhs = db_to_linear(a) * db_to_linear(b);
    const double rhs = db_to_linear(a + b);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(rhs));
  }
}

TEST_CASE("vegetation index identities") {
  CHECK(vegetation_index(VegetationIndexKind::NdviNirSwir, 0.4, 0.4, 0.1) == 0.0);
  CHECK(vegetation_index(VegetationIndexKind::NdviNirSwir, 0.2, 0.6, 0.1) ==
        doctest::Approx(0.5));
  CHECK(vegetation_index(VegetationIndexKind::Grvi, 0.3, 0.25, 0.25) ==
        doctest::Approx(1.0));
  CHECK(vegetation_index(VegetationIndexKind::Gdvi, 0.3, 0.25, 0.25) ==
        doctest::Approx(0.0));
  CHECK(vegetation_index(VegetationIndexKind::Cvi, 1.0, 1.0, 1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(vegetation_index(VegetationIndexKind::Cvi, 0.0, 1.0, 1.0),
                  ValidationError);
}

TEST_CASE("all five index formulas match direct evaluation on random triples") {
  Rng rng(17);
  for (int i = 0; i < 10000; ++i) {
    const double s = db_to_linear(rng.next_uniform(-30, 5));
    const double n = db_to_linear(rng.next_uniform(-30, 5));
    const double g = db_to_linear(rng.next_uniform(-30, 5));
    CHECK(vegetation_index(VegetationIndexKind::NdviNirGreen, s, n, g) ==
          doctest::Approx((n - g) / (n + g)).epsilon(1e-12));
    CHECK(vegetation_index(VegetationIndexKind::NdviNirSwir, s, n, g) ==
          doctest::Approx((n - s) / (n + s)).epsilon(1e-12));
    CHECK(vegetation_index(VegetationIndexKind::Cvi, s, n, g) ==
          doctest::Approx(n * g / (s * s)).epsilon(1e-12));
    CHECK(vegetation_index(VegetationIndexKind::Grvi, s, n, g) ==
          doctest::Approx(n / g).epsilon(1e-12));
    CHECK(vegetation_index(VegetationIndexKind::Gdvi, s, n, g) ==
          doctest::Approx(n - g).epsilon(1e-12));

    // NDVI outputs stay inside (-1, 1) and swap antisymmetrically.
    const double ndvi = vegetation_index(VegetationIndexKind::NdviNirSwir, s, n, g);
    CHECK(ndvi > -1.0);
    CHECK(ndvi < 1.0);
    CHECK(vegetation_index(VegetationIndexKind::NdviNirSwir, n, s, g) == -ndvi);
    CHECK(vegetation_index(VegetationIndexKind::NdviNirGreen, s, n, g) ==
          -vegetation_index(VegetationIndexKind::NdviNirGreen, s, g, n));
  }
}

TEST_CASE("identical class distributions give a near-zero separability score") {
  const auto cloud = two_class_cloud(-8.0, -8.0, 0.0, 30, 2);
  const auto report = vi_separability(cloud, VegetationIndexKind::NdviNirSwir);
  CHECK(std::abs(report.score) <= 1e-9);
}

TEST_CASE("disjoint class distributions give a large separability score") {
  // Indices concentrate near distinct values with tiny jitter.
  const auto cloud = two_class_cloud(-18.0, 2.0, 0.01, 50, 3);
  const auto report = vi_separability(cloud, VegetationIndexKind::NdviNirSwir);
  CHECK(report.score > 100.0);
  for (const auto& [cls, q] : report.per_class_stats) {
    CHECK(q.q25 <= q.median);
    CHECK(q.median <= q.q75);
  }
}

TEST_CASE("separability score is invariant under positive scaling of the bands") {
  // Scaling all linear reflectances by a common factor shifts every dB
  // value by a constant; NDVI-style indices are unchanged, so the report
  // must be too.
  auto cloud = two_class_cloud(-12.0, -4.0, 0.5, 40, 4);
  const auto before = vi_separability(cloud, VegetationIndexKind::NdviNirSwir);
  for (auto& p : cloud.points) {
    for (Channel c : kAllChannels) {
      p.set_reflectance(c, p.reflectance(c) + 6.02);  // times ~4 in linear units
    }
  }
  const auto after = vi_separability(cloud, VegetationIndexKind::NdviNirSwir);
  CHECK(after.score == doctest::Approx(before.score).epsilon(1e-9));
}

TEST_CASE("vi_separability rejects underpopulated classes") {
  auto cloud = two_class_cloud(-12.0, -4.0, 0.5, 30, 6);
  MultispectralPoint stray;
  stray.label = SemanticClass::Trunk;
  stray.set_reflectance(Channel::Swir, -5);
  stray.set_reflectance(Channel::Nir, -5);
  stray.set_reflectance(Channel::Green, -5);
  cloud.points.push_back(stray);
  CHECK_THROWS_WITH_AS(vi_separability(cloud, VegetationIndexKind::Cvi),
                       "vi_separability: classes with fewer than 10 points: trunk (1)",
                       ValidationError);
}

TEST_CASE("separability report renders one row per class plus a score line") {
  const auto cloud = two_class_cloud(-12.0, -4.0, 0.5, 25, 8);
  const auto text = to_text(vi_separability(cloud, VegetationIndexKind::Grvi));
  CHECK(text.find("ground") != std::string::npos);
  CHECK(text.find("foliage") != std::string::npos);
  CHECK(text.find("score ") != std::string::npos);
}
