#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "tfold/geometry.hpp"
#include "tfold/proprio.hpp"

using namespace tfold;

namespace {

Eigen::Matrix4d random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  const Eigen::Quaterniond q = Eigen::Quaterniond(g(rng), g(rng), g(rng), g(rng)).normalized();
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = q.toRotationMatrix();
  m.topRightCorner<3, 1>() = Eigen::Vector3d(g(rng), g(rng), g(rng)) * 50.0;
  return m;
}

double column_centroid(const Frame& f, int x, int channel, int background) {
  double s = 0, m = 0;
  for (int y = 0; y < f.height; ++y) {
    const double v = f.at(x, y, channel) - background;
    s += v;
    m += v * (y + 0.5);
  }
  return m / s;
}

}  // namespace

TEST_CASE("torques from a wrench") {
  auto t = torques_from_wrench({50, 0, 0}, {0, 0, -1});
  CHECK(t.bending == 50.0);
  CHECK(t.twisting == 0.0);
  t = torques_from_wrench({50, 10, 0}, {0, 0, -1});
  CHECK(t.bending == 50.0);
  CHECK(t.twisting == -10.0);
  t = torques_from_wrench({0, 0, 0}, {3, -2, 7});
  CHECK(t.bending == 0.0);
  CHECK(t.twisting == 0.0);
}

TEST_CASE("torques are linear in the force") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> small(-64, 64);
  for (int i = 0; i < 200; ++i) {
    // Small integers keep every product exact in binary floating point.
    const Eigen::Vector3d p(small(rng), small(rng), small(rng));
    const Eigen::Vector3d f1(small(rng), small(rng), small(rng));
    const Eigen::Vector3d f2(small(rng), small(rng), small(rng));
    const Torques a = torques_from_wrench(p, f1);
    const Torques b = torques_from_wrench(p, f2);
    const Torques s = torques_from_wrench(p, f1 + f2);
    CHECK(s.bending == a.bending + b.bending);
    CHECK(s.twisting == a.twisting + b.twisting);
    const Torques scaled = torques_from_wrench(p, 4.0 * f1);
    CHECK(scaled.bending == 4.0 * a.bending);
    CHECK(scaled.twisting == 4.0 * a.twisting);
  }
}

TEST_CASE("finger frame transform") {
  const Eigen::Matrix4d id = Eigen::Matrix4d::Identity();
  const Wrench same = transform_to_finger_frame(id, id, {1, 2, 3}, {4, 5, 6});
  CHECK(same.force == Eigen::Vector3d(1, 2, 3));
  CHECK(same.contact_point == Eigen::Vector3d(4, 5, 6));

  Eigen::Matrix4d finger = id;
  finger.topLeftCorner<3, 3>() << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Wrench rotated = transform_to_finger_frame(id, finger, {1, 0, 0}, {0, 0, 0});
  CHECK(rotated.force.isApprox(Eigen::Vector3d(0, -1, 0)));

  std::mt19937_64 rng(17);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Matrix4d probe = random_pose(rng);
    const Eigen::Matrix4d fing = random_pose(rng);
    const Eigen::Vector3d f(1.5, -2.0, 0.25);
    const Eigen::Vector3d p(10.0, 3.0, -7.0);
    const Wrench w = transform_to_finger_frame(probe, fing, f, p);
    // Swapping the roles maps the finger-frame wrench back into the probe frame.
    const Wrench back = transform_to_finger_frame(fing, probe, w.force, w.contact_point);
    CHECK((back.force - f).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((back.contact_point - p).cwiseAbs().maxCoeff() < 1e-10);
  }

  Eigen::Matrix4d sheared = id;
  sheared(0, 1) = 0.1;
  try {
    transform_to_finger_frame(id, sheared, {1, 0, 0}, {0, 0, 0});
    FAIL("accepted a non-rigid pose");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "finger_pose");
  }
  Eigen::Matrix4d mirrored = id;
  mirrored(2, 2) = -1.0;
  CHECK_THROWS_AS(transform_to_finger_frame(mirrored, id, {1, 0, 0}, {0, 0, 0}), ValidationError);
}

TEST_CASE("beam deflection closed form") {
  const BackboneModel m;
  const double moment = 120.0;
  const LedDisplacements d = deflect_leds(m, moment, 0.0);
  REQUIRE(d.bending_px.size() == static_cast<std::size_t>(m.stations));
  const double tip = moment * m.length * m.length / (2.0 * m.bending_stiffness) * m.px_per_mm;
  CHECK(std::abs(d.bending_px.back() - tip) <= 1e-12 * tip);
  CHECK(d.station_mm.back() == m.length);
  for (double t : d.twist_px) CHECK(t == 0.0);

  const LedDisplacements z = deflect_leds(m, 0.0, 0.0);
  for (std::size_t j = 0; j < z.bending_px.size(); ++j) {
    CHECK(z.strip_a(j) == 0.0);
    CHECK(z.strip_b(j) == 0.0);
  }

  const LedDisplacements tw = deflect_leds(m, 0.0, 80.0);
  for (std::size_t j = 0; j < tw.twist_px.size(); ++j) CHECK(tw.strip_a(j) == -tw.strip_b(j));
  const double lambda = 80.0 * m.length / m.torsional_stiffness * m.strip_offset * m.px_per_mm;
  CHECK(tw.twist_px.back() == doctest::Approx(lambda).epsilon(1e-12));

  CHECK_THROWS_AS(deflect_leds(m, 301.0, 0.0), RangeError);
  CHECK_THROWS_AS(deflect_leds(m, 0.0, -301.0), RangeError);
}

TEST_CASE("deflection is linear in each torque") {
  const BackboneModel m;
  const LedDisplacements a = deflect_leds(m, 40.0, 10.0);
  const LedDisplacements b = deflect_leds(m, 80.0, 20.0);
  for (std::size_t j = 0; j < a.bending_px.size(); ++j) {
    CHECK(b.bending_px[j] == doctest::Approx(2.0 * a.bending_px[j]).epsilon(1e-14));
    CHECK(b.twist_px[j] == doctest::Approx(2.0 * a.twist_px[j]).epsilon(1e-14));
  }
}

TEST_CASE("zero displacement renders the reference frame") {
  const BackboneModel m;
  const LedCamera cam;
  CHECK(render_synthetic_frame(m, cam, deflect_leds(m, 0.0, 0.0)) == reference_frame(m, cam));
}

TEST_CASE("uniform displacement moves the strip centroid") {
  const BackboneModel m;
  const LedCamera cam;
  const Frame ref = reference_frame(m, cam);
  const Frame moved = render_synthetic_frame(m, cam, uniform_displacement(m, 3.0));
  for (int x : {0, 17, 48, 95}) {
    CHECK(column_centroid(moved, x, 0, cam.background) - column_centroid(ref, x, 0, cam.background) ==
          doctest::Approx(3.0).epsilon(0.05 / 3.0));
    CHECK(column_centroid(moved, x, 1, cam.background) - column_centroid(ref, x, 1, cam.background) ==
          doctest::Approx(3.0).epsilon(0.05 / 3.0));
  }
}

TEST_CASE("centroid readback inverts the forward model") {
  const BackboneModel m;
  const LedCamera cam;
  const Torques cases[] = {{-62.4, 5.4}, {-120.0, 40.0}, {30.0, -50.0}, {-90.0, -25.0}};
  for (const Torques& t : cases) {
    const Frame f = render_synthetic_frame(m, cam, deflect_leds(m, t.bending, t.twisting));
    const Torques r = oracle::readback_torques(f, m, cam);
    CHECK(r.bending == doctest::Approx(t.bending).epsilon(0.02));
    CHECK(r.twisting == doctest::Approx(t.twisting).epsilon(0.02));
  }
}

TEST_CASE("noise is seeded") {
  const BackboneModel m;
  const LedCamera cam;
  const auto d = deflect_leds(m, -50.0, 10.0);
  CHECK(render_synthetic_frame(m, cam, d, 5.0, 3) == render_synthetic_frame(m, cam, d, 5.0, 3));
  CHECK_FALSE(render_synthetic_frame(m, cam, d, 5.0, 3) == render_synthetic_frame(m, cam, d, 5.0, 4));
}

TEST_CASE("prepared input shape") {
  const BackboneModel m;
  const LedCamera cam;
  const Frame ref = reference_frame(m, cam);
  const PlanarImage in = prepare_input(ref, ref, cam);
  CHECK(in.channels == 2);
  CHECK(in.height == cam.region_height);
  CHECK(in.width == cam.input_width);
  for (double v : in.data) CHECK(v == 0.0);
}

TEST_CASE("dataset generation") {
  const BackboneModel m;
  const LedCamera cam;
  DatasetOptions opt;
  opt.count = 50;
  opt.noise_sigma = 2.0;
  opt.seed = 21;
  const TorqueDataset a = generate_dataset(m, cam, opt);
  const TorqueDataset b = generate_dataset(m, cam, opt);
  REQUIRE(a.samples.size() == 50);
  CHECK(a.reference == reference_frame(m, cam));
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].frame == b.samples[i].frame);
    CHECK(a.samples[i].torques.bending == b.samples[i].torques.bending);
    CHECK(std::abs(a.samples[i].torques.bending) <= m.max_bending);
  }

  const auto dir = std::filesystem::temp_directory_path() / "tfold_test_dataset";
  std::filesystem::remove_all(dir);
  save_dataset(dir.string(), a);
  CHECK(std::filesystem::exists(dir / "index.tsv"));
  CHECK(std::filesystem::exists(dir / "reference.ppm"));
  const TorqueDataset loaded = load_dataset(dir.string());
  REQUIRE(loaded.samples.size() == a.samples.size());
  CHECK(loaded.reference == a.reference);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(loaded.samples[i].frame == a.samples[i].frame);
    CHECK(loaded.samples[i].torques.bending == a.samples[i].torques.bending);
    CHECK(loaded.samples[i].torques.twisting == a.samples[i].torques.twisting);
  }
  std::filesystem::remove_all(dir);
  CHECK_THROWS(load_dataset(dir.string()));
}
