#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include <omp.h>

#include "doctest.h"
#include "oracles.hpp"
#include "tfold/geometry.hpp"
#include "tfold/io.hpp"
#include "tfold/regressor.hpp"

using namespace tfold;

namespace {

RegressorShape small_shape() {
  RegressorShape s;
  s.height = 12;
  s.width = 16;
  s.conv1_filters = 3;
  s.conv2_filters = 4;
  s.hidden = 6;
  return s;
}

PlanarImage random_input(std::mt19937_64& rng, const RegressorShape& s) {
  PlanarImage img(s.channels, s.height, s.width);
  std::normal_distribution<double> g(0.0, 0.3);
  for (double& v : img.data) v = g(rng);
  return img;
}

std::vector<RegressorSample> synthetic_samples(int count, std::uint64_t seed) {
  const BackboneModel m;
  const LedCamera cam;
  DatasetOptions opt;
  opt.count = count;
  opt.seed = seed;
  return prepare_samples(generate_dataset(m, cam, opt), cam);
}

}  // namespace

TEST_CASE("default shape") {
  const RegressorShape s;
  CHECK(s.conv1_height() == 16);
  CHECK(s.conv1_width() == 24);
  CHECK(s.conv2_height() == 8);
  CHECK(s.conv2_width() == 12);
  CHECK(s.parameter_count() == 8 * 2 * 25 + 8 + 16 * 8 * 25 + 16 + 1536 * 64 + 64 + 64 * 2 + 2);
  RegressorShape even = s;
  even.kernel = 4;
  CHECK_THROWS_AS(even.validate(), ValidationError);
}

TEST_CASE("gradient matches finite differences") {
  std::mt19937_64 rng(99);
  SUBCASE("every parameter of a small network") {
    const RegressorShape s = small_shape();
    TorqueRegressor model(s, 5);
    std::vector<PlanarImage> in;
    std::vector<std::array<double, 2>> t;
    for (int i = 0; i < 3; ++i) {
      in.push_back(random_input(rng, s));
      t.push_back({0.7 - i, -0.4 + 0.5 * i});
    }
    std::vector<std::size_t> all(model.parameters().size());
    std::iota(all.begin(), all.end(), 0);
    CHECK(oracle::max_gradient_error(model, in, t, all) < 1e-4);
  }
  SUBCASE("sampled parameters of the default network") {
    const RegressorShape s;
    TorqueRegressor model(s, 6);
    std::vector<PlanarImage> in;
    std::vector<std::array<double, 2>> t;
    for (int i = 0; i < 3; ++i) {
      in.push_back(random_input(rng, s));
      t.push_back({1.0 - i, 0.3 * i});
    }
    std::uniform_int_distribution<std::size_t> pick(0, model.parameters().size() - 1);
    std::vector<std::size_t> idx;
    for (int i = 0; i < 400; ++i) idx.push_back(pick(rng));
    // Always include the output layer.
    for (std::size_t i = model.parameters().size() - 130; i < model.parameters().size(); ++i) idx.push_back(i);
    CHECK(oracle::max_gradient_error(model, in, t, idx) < 1e-4);
  }
}

TEST_CASE("parallel gradient agrees with the serial reference") {
  std::mt19937_64 rng(4);
  const RegressorShape s;
  const TorqueRegressor model(s, 8);
  std::vector<PlanarImage> in;
  std::vector<std::array<double, 2>> t;
  for (int i = 0; i < 32; ++i) {
    in.push_back(random_input(rng, s));
    t.push_back({0.1 * i - 1.0, 0.5});
  }
  const std::size_t n = model.parameters().size();
  std::vector<double> gs(n), g1(n), g4(n);
  const double ls = model.loss_and_gradient_serial(in, t, gs);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const double l1 = model.loss_and_gradient(in, t, g1);
  omp_set_num_threads(4);
  const double l4 = model.loss_and_gradient(in, t, g4);
  omp_set_num_threads(saved);
  CHECK(l1 == l4);
  CHECK(g1 == g4);
  CHECK(l1 == doctest::Approx(ls).epsilon(1e-12));
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(g1[i] - gs[i]));
  CHECK(worst < 1e-12);
}

TEST_CASE("a single sample is memorized") {
  std::mt19937_64 rng(12);
  RegressorConfig cfg;
  cfg.epochs = 200;
  cfg.shape = small_shape();
  const std::vector<RegressorSample> one{{random_input(rng, cfg.shape), {-40.0, 12.0}}};
  const TrainResult r = train_regressor(one, cfg);
  REQUIRE(r.loss_history.size() == 200);
  CHECK(r.loss_history.back() < 1e-4);
  const Torques p = r.model.predict(one[0].input);
  CHECK(p.bending == doctest::Approx(-40.0).epsilon(1e-3));
}

TEST_CASE("training loss trends down on synthetic strips") {
  const std::vector<RegressorSample> data = synthetic_samples(256, 3);
  RegressorConfig cfg;
  cfg.epochs = 30;
  const TrainResult r = train_regressor(data, cfg);
  for (double l : r.loss_history) CHECK(std::isfinite(l));
  std::vector<double> avg;
  for (std::size_t i = 0; i + 10 <= r.loss_history.size(); ++i)
    avg.push_back(std::accumulate(r.loss_history.begin() + i, r.loss_history.begin() + i + 10, 0.0) / 10.0);
  for (std::size_t i = 1; i < avg.size(); ++i) CHECK(avg[i] <= avg[i - 1]);

  SUBCASE("training is deterministic") {
    const TrainResult again = train_regressor(data, cfg);
    CHECK(again.loss_history == r.loss_history);
    CHECK(again.model.parameters() == r.model.parameters());
  }
  SUBCASE("scaled targets scale the predictions") {
    std::vector<RegressorSample> scaled = data;
    for (auto& s : scaled) s.target = {3.0 * s.target.bending, 3.0 * s.target.twisting};
    const TrainResult rs = train_regressor(scaled, cfg);
    for (int i = 0; i < 10; ++i) {
      const Torques a = r.model.predict(data[i].input);
      const Torques b = rs.model.predict(data[i].input);
      CHECK(b.bending == doctest::Approx(3.0 * a.bending).epsilon(1e-6));
      CHECK(b.twisting == doctest::Approx(3.0 * a.twisting).epsilon(1e-6));
    }
  }
}

TEST_CASE("a mean predictor scores the population std") {
  const std::vector<RegressorSample> data = synthetic_samples(64, 9);
  TorqueRegressor model(RegressorShape{}, 1);
  std::fill(model.parameters().begin(), model.parameters().end(), 0.0);
  double mb = 0, mt = 0;
  for (const auto& s : data) {
    mb += s.target.bending / data.size();
    mt += s.target.twisting / data.size();
  }
  double vb = 0, vt = 0;
  for (const auto& s : data) {
    vb += (s.target.bending - mb) * (s.target.bending - mb) / data.size();
    vt += (s.target.twisting - mt) * (s.target.twisting - mt) / data.size();
  }
  model.target_mean = {mb, mt};
  model.target_std = {2.0, 2.0};
  const RegressorEvaluation e = evaluate_regressor(model, data);
  CHECK(e.bending_rmse == doctest::Approx(std::sqrt(vb)).epsilon(1e-12));
  CHECK(e.twisting_rmse == doctest::Approx(std::sqrt(vt)).epsilon(1e-12));
  REQUIRE(e.predictions.size() == data.size());
  CHECK(e.predictions[5].bending == mb);
}

TEST_CASE("non-finite loss stops training with the epoch") {
  std::mt19937_64 rng(2);
  RegressorConfig cfg;
  cfg.shape = small_shape();
  cfg.epochs = 5;
  std::vector<RegressorSample> data{{random_input(rng, cfg.shape), {1.0, 2.0}}, {random_input(rng, cfg.shape), {3.0, 4.0}}};
  data[1].input.data[7] = std::numeric_limits<double>::quiet_NaN();
  try {
    train_regressor(data, cfg);
    FAIL("trained through a NaN");
  } catch (const TrainingError& e) {
    CHECK(e.epoch() == 1);
  }
  CHECK_THROWS_AS(train_regressor(std::vector<RegressorSample>{}, cfg), DomainError);
}

TEST_CASE("model serialization") {
  TorqueRegressor model(small_shape(), 44);
  model.target_mean = {-62.4, 5.4};
  model.target_std = {28.3, 27.3};
  const std::string bytes = encode_regressor(model);
  CHECK(bytes.substr(0, 8) == "TFOLDCNN");
  CHECK(bytes.size() == 8 + 4 + 8 * 4 + 4 * 8 + 8 + 8 * model.parameters().size());
  const TorqueRegressor back = decode_regressor(bytes);
  CHECK(back.shape() == model.shape());
  CHECK(back.parameters() == model.parameters());
  CHECK(back.target_std == model.target_std);
  CHECK(encode_regressor(back) == bytes);

  CHECK_THROWS_AS(decode_regressor("NOTACNN!" + bytes.substr(8)), IoError);
  CHECK_THROWS_AS(decode_regressor(bytes.substr(0, bytes.size() - 1)), IoError);
  CHECK_THROWS_AS(decode_regressor(bytes + "x"), IoError);

  const auto path = std::filesystem::temp_directory_path() / "tfold_test_model.bin";
  save_regressor(path.string(), model);
  CHECK(load_regressor(path.string()).parameters() == model.parameters());
  std::filesystem::remove(path);
}
