// Acceptance run: one PASS/FAIL line per criterion, with the measured values
// and wall time. Exit status is non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "tfold/report.hpp"
// After Eigen: resolv.h, pulled in by httplib, defines a `_res` macro.
#include "httplib.h"

#include "oracles.hpp"
#include "tfold/config.hpp"
#include "tfold/design_opt.hpp"
#include "tfold/imaging.hpp"
#include "tfold/io.hpp"
#include "tfold/metrics.hpp"
#include "tfold/proprio.hpp"
#include "tfold/regressor.hpp"
#include "tfold/scene.hpp"
#include "tfold/service.hpp"

using namespace tfold;
namespace fs = std::filesystem;

namespace {

constexpr double kDeg = M_PI / 180.0;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [x]");
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

int failures = 0;

void criterion(int number, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0.0) out.require(secs < limit_s, fmt("%.2f s (limit %.0f s)", secs, limit_s));
  if (!out.pass) ++failures;
  std::printf("criterion %d: %s  %s\n", number, out.pass ? "PASS" : "FAIL", out.detail.c_str());
  std::fflush(stdout);
}

std::string source(const std::string& rel) { return std::string(TFOLD_SOURCE_DIR) + "/" + rel; }

SceneConfig reference() { return load_scene_config(source("configs/reference_scene.json")); }

// ---------------------------------------------------------------------------

Outcome fov() {
  Outcome o;
  SensorScene flat;
  flat.camera.pinhole = {0, 0};
  flat.camera.fov_deg = 120.0;
  flat.camera.pixel_count = 1080;
  flat.surfaces.push_back({"interface", LineSegment({1, 50}, {1, -50}), Refractive{1.41, 1.0}});
  flat.skin = LineSegment({20, -50}, {20, 50});
  const double f = effective_fov(flat);

  SceneConfig dome_cfg = reference();
  dome_cfg.surfaces.clear();
  const double d = effective_fov(dome_cfg.to_scene());

  o.require(std::abs(f - 75.78) <= 0.1, fmt("flat %.3f deg", f));
  o.require(std::abs(d - 120.0) <= 0.1, fmt("dome %.3f deg", d));
  o.require(d > f, "dome > flat");
  return o;
}

Outcome reference_scene() {
  Outcome o;
  const SensorScene s = reference().to_scene();
  const auto traces = trace_all(s);
  const DesignMetrics m = compute_metrics(s, traces);
  const double ratio = m.bottom_px_per_mm / m.tip_px_per_mm;
  o.require(m.coverage >= 0.95, fmt("coverage %.4f", m.coverage));
  o.require(m.min_imaging_angle > 10.0, fmt("min angle %.2f deg", m.min_imaging_angle));
  o.require(m.bottom_px_per_mm > m.tip_px_per_mm,
            fmt("bottom %.2f > tip %.2f px/mm", m.bottom_px_per_mm, m.tip_px_per_mm));
  o.require(ratio >= 1.2 && ratio <= 2.2, fmt("ratio %.3f", ratio));
  return o;
}

Outcome geometry_oracles() {
  Outcome o;
  std::mt19937_64 rng(2025);
  std::uniform_real_distribution<double> coord(-10.0, 10.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto points = [&](int n) {
    std::vector<Point2> p;
    for (int i = 0; i < n; ++i) p.push_back({coord(rng), coord(rng)});
    return p;
  };

  double eval_err = 0.0;
  double unity_err = 0.0;
  for (int s = 0; s < 100; ++s) {
    const int degree = 1 + s % 4;
    const int n = degree + 1 + static_cast<int>(rng() % 6);
    const auto ctrl = points(n);
    const auto knots = oracle::random_clamped_knots(degree, n, rng);
    const BSplineCurve c(degree, ctrl, knots);
    const BSplineCurve ones(degree, std::vector<Point2>(static_cast<std::size_t>(n), Point2{1.0, 1.0}), knots);
    for (int k = 0; k <= 50; ++k) {
      const double t = k == 50 ? 1.0 : unit(rng);
      eval_err = std::max(eval_err, distance(c.evaluate(t), oracle::cox_de_boor(degree, ctrl, knots, t)));
      double sum = 0.0;
      for (int i = 0; i < n; ++i) sum += oracle::basis(i, degree, t, knots);
      unity_err = std::max(unity_err, std::abs(sum - 1.0));
      unity_err = std::max(unity_err, distance(ones.evaluate(t), {1.0, 1.0}));
    }
  }
  o.require(eval_err < 1e-9, fmt("de Boor vs Cox-de Boor %.1e", eval_err));
  o.require(unity_err < 1e-12, fmt("partition of unity %.1e", unity_err));

  // Optics closed forms.
  const Dir2 up = Dir2::from_angle(M_PI / 2);
  double reflect_err = 0.0;
  double snell_err = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Dir2 in = Dir2::from_angle(M_PI * (2 * unit(rng) - 1));
    const Dir2 n = Dir2::from_angle(M_PI * (2 * unit(rng) - 1));
    const Dir2 r = reflect(in, n);
    reflect_err = std::max({reflect_err, std::abs(dot(r, n) + dot(in, n)),
                            std::abs(cross(r.vec(), n.vec()) - cross(in.vec(), n.vec()))});
    const double n1 = 1.0 + unit(rng);
    const double n2 = 1.0 + unit(rng);
    const auto t = refract(in, n, n1, n2);
    if (const Dir2* out = std::get_if<Dir2>(&t)) {
      // Tangential component of n*d is conserved.
      snell_err = std::max(snell_err, std::abs(n1 * cross(in.vec(), n.vec()) - n2 * cross(out->vec(), n.vec())));
    } else {
      const double sin_i = std::abs(cross(in.vec(), n.vec()));
      snell_err = std::max(snell_err, n1 * sin_i > n2 ? 0.0 : 1.0);
    }
  }
  o.require(reflect_err < 1e-12, fmt("reflection %.1e", reflect_err));
  o.require(snell_err < 1e-12, fmt("Snell %.1e", snell_err));
  const double critical = std::asin(1.0 / 1.41) / kDeg;
  const bool tir_above =
      std::holds_alternative<TotalInternalReflection>(refract(Dir2::from_angle(M_PI / 2 - (critical + 1e-4) * kDeg), up, 1.41, 1.0));
  const bool pass_below =
      std::holds_alternative<Dir2>(refract(Dir2::from_angle(M_PI / 2 - (critical - 1e-4) * kDeg), up, 1.41, 1.0));
  o.require(std::abs(critical - 45.17) < 0.005 && tir_above && pass_below, fmt("TIR at %.3f deg", critical));

  // Intersections against the dense-sampling oracle.
  double hit_err = 0.0;
  int cases = 0;
  int hits = 0;
  int mismatched = 0;
  for (int s = 0; s < 50; ++s) {
    const int degree = 2 + s % 2;
    const auto ctrl = points(6);
    const auto knots = oracle::random_clamped_knots(degree, 6, rng);
    const BSplineCurve c(degree, ctrl, knots);
    const auto dense = oracle::dense_polyline(degree, ctrl, knots, 200001);
    for (int k = 0; k < 20; ++k, ++cases) {
      const Ray ray({1.2 * coord(rng), 1.2 * coord(rng)}, Dir2::from_angle(M_PI * (2 * unit(rng) - 1)));
      const auto got = intersect(ray, c);
      const auto want = oracle::dense_intersection(ray.origin, ray.direction.vec(), dense);
      if (got.has_value() != want.has_value()) {
        ++mismatched;
        continue;
      }
      if (!got) continue;
      ++hits;
      hit_err = std::max(hit_err, distance(got->point, want->point));
    }
  }
  o.require(mismatched == 0 && hit_err < 1e-4,
            std::to_string(cases) + " ray cases, " + std::to_string(hits) + " hits, " + std::to_string(mismatched) +
                " mismatches, " + fmt("max %.1e mm", hit_err));
  return o;
}

Outcome reversibility() {
  Outcome o;
  const SensorScene s = reference().to_scene();
  const auto traces = trace_all(s);
  double worst = 0.0;
  int checked = 0;
  bool shapes = true;
  for (const auto& t : traces) {
    if (t.terminal != Terminal::SkinHit) continue;
    ++checked;
    const auto back = retrace_reversed(s, t);
    if (back.size() != t.path.size()) {
      shapes = false;
      continue;
    }
    for (std::size_t k = 0; k < back.size(); ++k)
      worst = std::max(worst, distance(back[k], t.path[t.path.size() - 1 - k].point));
  }
  o.require(shapes && worst < 1e-6, std::to_string(checked) + " skin hits, " + fmt("max %.1e mm", worst));
  return o;
}

Outcome optimizer() {
  Outcome o;
  const std::vector<double> target{1.0, -2.0, 0.5, 3.0};
  DesignVector x0;
  x0.values = {0, 0, 0, 0};
  x0.fixed.assign(4, false);
  NelderMeadOptions opt;
  opt.budget = 500;
  const OptimizeResult toy = nelder_mead(
      [&](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t i = 0; i < 4; ++i) s += (x[i] - target[i]) * (x[i] - target[i]);
        return -s;
      },
      x0, opt);
  double err = 0.0;
  for (std::size_t i = 0; i < 4; ++i) err = std::max(err, std::abs(toy.best.values[i] - target[i]));
  o.require(err < 1e-3 && toy.history.size() <= 500,
            fmt("sphere error %.1e", err) + " in " + std::to_string(toy.history.size()) + " evaluations");

  // Deliberately perturbed mirror: control point k raised by 3k/7 mm.
  const SceneConfig base = reference();
  DesignVector start = design_vector(base);
  for (int i = 0; i < 16; i += 2) start.values[static_cast<std::size_t>(i) + 1] += 3.0 * i / 14.0;
  DesignObjective objective;
  objective.envelope = base.envelope;
  const DesignEvaluation before = evaluate_design(start, base, objective);
  const OptimizeResult r = optimize(start, base, objective, 2000, 1);
  const DesignEvaluation after = evaluate_design(r.best, base, objective);
  bool monotone = true;
  for (std::size_t i = 1; i < r.history.size(); ++i) monotone = monotone && r.history[i].best_score >= r.history[i - 1].best_score;
  o.require(monotone && r.history.size() == 2000 && r.best_score >= r.initial_score,
            "best-so-far monotone over " + std::to_string(r.history.size()) + " evaluations");
  o.require(after.min_angle - before.min_angle >= 2.0,
            fmt("perturbed min angle %.2f -> %.2f deg", before.min_angle, after.min_angle));
  return o;
}

// Noise level for the noisy half of the proprioception check.
constexpr double kNoiseSigma = 10.0;

Outcome proprioception() {
  Outcome o;
  std::mt19937_64 rng(77);

  // (a) exact linearity and superposition; small integers keep products exact.
  std::uniform_int_distribution<int> small(-100, 100);
  bool exact = true;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d p(small(rng), small(rng), small(rng));
    const Eigen::Vector3d f1(small(rng), small(rng), small(rng));
    const Eigen::Vector3d f2(small(rng), small(rng), small(rng));
    const double alpha = small(rng);
    const Torques a = torques_from_wrench(p, f1);
    const Torques b = torques_from_wrench(p, f2);
    const Torques s = torques_from_wrench(p, f1 + f2);
    const Torques k = torques_from_wrench(p, alpha * f1);
    exact = exact && s.bending == a.bending + b.bending && s.twisting == a.twisting + b.twisting &&
            k.bending == alpha * a.bending && k.twisting == alpha * a.twisting;
  }
  o.require(exact, "(a) linearity/superposition exact on 1000 samples");

  // (b) end-moment closed form.
  const BackboneModel model;
  double beam_err = 0.0;
  for (double moment : {-250.0, -62.4, 1.0, 40.0, 180.0}) {
    const LedDisplacements d = deflect_leds(model, moment, 0.0);
    const double expect = moment * model.length * model.length / (2.0 * model.bending_stiffness) * model.px_per_mm;
    beam_err = std::max(beam_err, std::abs(d.bending_px.back() - expect) / std::abs(expect));
  }
  o.require(beam_err <= 1e-12, fmt("(b) beam %.1e rel", beam_err));

  // (c) finite differences on a 3-sample batch of the default network.
  {
    const RegressorShape shape;
    const TorqueRegressor net(shape, 3);
    std::normal_distribution<double> g(0.0, 0.3);
    std::vector<PlanarImage> in;
    std::vector<std::array<double, 2>> tgt;
    for (int i = 0; i < 3; ++i) {
      PlanarImage img(shape.channels, shape.height, shape.width);
      for (double& v : img.data) v = g(rng);
      in.push_back(std::move(img));
      tgt.push_back({g(rng), g(rng)});
    }
    std::vector<std::size_t> idx;
    const std::size_t n = net.parameters().size();
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (int i = 0; i < 1500; ++i) idx.push_back(pick(rng));
    for (std::size_t i = n - 130; i < n; ++i) idx.push_back(i);
    const double err = oracle::max_gradient_error(net, in, tgt, idx);
    o.require(err < 1e-4, fmt("(c) gradient %.1e rel over ", err) + std::to_string(idx.size()) + " parameters");
  }

  // (d) end-to-end synthetic pipeline.
  const LedCamera camera;
  auto pipeline = [&](double sigma, double& bending_rmse, double& twisting_rmse, double& oracle_b, double& oracle_t) {
    DatasetOptions train_opt;
    train_opt.count = 2000;
    train_opt.noise_sigma = sigma;
    train_opt.seed = 1;
    DatasetOptions test_opt = train_opt;
    test_opt.count = 500;
    test_opt.seed = 2;
    const TorqueDataset train = generate_dataset(model, camera, train_opt);
    const TorqueDataset test = generate_dataset(model, camera, test_opt);
    const TrainResult r = train_regressor(prepare_samples(train, camera), RegressorConfig{});
    const RegressorEvaluation ev = evaluate_regressor(r.model, prepare_samples(test, camera));
    bending_rmse = ev.bending_rmse;
    twisting_rmse = ev.twisting_rmse;
    double sb = 0.0;
    double st = 0.0;
    for (const auto& s : test.samples) {
      const Torques t = oracle::readback_torques(s.frame, model, camera);
      sb += (t.bending - s.torques.bending) * (t.bending - s.torques.bending);
      st += (t.twisting - s.torques.twisting) * (t.twisting - s.torques.twisting);
    }
    oracle_b = std::sqrt(sb / test.samples.size());
    oracle_t = std::sqrt(st / test.samples.size());
  };

  double b0, t0, ob0, ot0;
  pipeline(0.0, b0, t0, ob0, ot0);
  o.require(b0 < 0.05 * 28.3 && t0 < 0.05 * 27.3,
            fmt("(d) noiseless RMSE %.3f / %.3f N*mm", b0, t0) + fmt(" (%.2f%% / %.2f%% of std)", 100 * b0 / 28.3, 100 * t0 / 27.3));

  double bn, tn, obn, otn;
  pipeline(kNoiseSigma, bn, tn, obn, otn);
  const double rb = bn / obn;
  const double rt = tn / otn;
  o.require(rb >= 0.8 && rb <= 2.0 && rt >= 0.8 && rt <= 2.0,
            fmt("(d) sigma %.0f: RMSE %.3f", kNoiseSigma, bn) + fmt(" / %.3f vs readback %.3f", tn, obn) +
                fmt(" / %.3f", otn) + fmt(", ratio %.2f / %.2f", rb, rt));
  return o;
}

Outcome imaging() {
  Outcome o;
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> level(0, 255);

  Frame a(2, 1);
  Frame b(2, 1);
  a.at(0, 0, 0) = 120;
  a.at(0, 0, 1) = 80;
  a.at(0, 0, 2) = 30;
  b.at(0, 0, 0) = 100;
  b.at(0, 0, 1) = 90;
  b.at(0, 0, 2) = 30;
  const DiffImage d = color_difference(a, b);
  const MonoImage m = monochrome_difference(d);
  o.require(d.at(0, 0, 0) == 20 && d.at(0, 0, 1) == -10 && d.at(0, 0, 2) == 0 && m.at(0, 0) == 30 && m.at(1, 0) == 0,
            "fixture arithmetic");

  bool anti = true;
  bool linear = true;
  bool identity = true;
  for (int i = 0; i < 100; ++i) {
    Frame f(40, 30);
    Frame g(40, 30);
    for (auto& v : f.data) v = static_cast<std::uint8_t>(level(rng));
    for (auto& v : g.data) v = static_cast<std::uint8_t>(level(rng));
    const DiffImage fg = color_difference(f, g);
    const DiffImage gf = color_difference(g, f);
    for (std::size_t k = 0; k < fg.data.size(); ++k) anti = anti && fg.data[k] == -gf.data[k];

    Frame h(40, 30);
    for (auto& v : h.data) v = static_cast<std::uint8_t>(level(rng));
    const DiffImage hg = color_difference(h, g);
    // (f - g) + (h - g) as one signed image.
    DiffImage sum = fg;
    for (std::size_t k = 0; k < sum.data.size(); ++k) sum.data[k] = static_cast<std::int16_t>(fg.data[k] + hg.data[k]);
    const MonoImage ms = monochrome_difference(sum);
    const MonoImage m1 = monochrome_difference(fg);
    const MonoImage m2 = monochrome_difference(hg);
    for (std::size_t k = 0; k < ms.data.size(); ++k) linear = linear && ms.data[k] == m1.data[k] + m2.data[k];

    const PlanarImage crop = crop_led_regions(fg, {0, 0, 40, 30}, {0, 0, 40, 30}, 40, 30);
    for (int y = 0; y < 30; ++y)
      for (int x = 0; x < 40; ++x)
        identity = identity && crop.at(0, y, x) == fg.at(x, y, 0) && crop.at(1, y, x) == fg.at(x, y, 1);
  }
  o.require(anti, "antisymmetry on 100 frames");
  o.require(linear, "monochrome linearity on 100 frames");
  o.require(identity, "native-size crop identity");

  DiffImage board{2, 2, std::vector<std::int16_t>(12, 0)};
  board.data[0] = 10;
  board.data[3] = -30;
  board.data[6] = 50;
  board.data[9] = 7;
  const PlanarImage one = crop_led_regions(board, {0, 0, 2, 2}, {0, 0, 2, 2}, 1, 1);
  o.require(one.at(0, 0, 0) == (10 - 30 + 50 + 7) / 4.0, "2x2 -> 1x1 average");

  // Bilinear consistency on smooth content: 2x then back vs direct.
  DiffImage smooth{64, 48, std::vector<std::int16_t>(64 * 48 * 3)};
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x)
      for (int c = 0; c < 3; ++c)
        smooth.data[(static_cast<std::size_t>(y) * 64 + x) * 3 + c] =
            static_cast<std::int16_t>(std::lround(100.0 * std::sin(2 * M_PI * x / 40.0 + c) + 60.0 * std::cos(2 * M_PI * y / 36.0)));
  const Rect r{5, 7, 40, 30};
  const PlanarImage direct = crop_led_regions(smooth, r, r, 24, 16);
  const PlanarImage twice = crop_led_regions(smooth, r, r, 48, 32);
  double worst = 0.0;
  for (int c = 0; c < 2; ++c) {
    const std::vector<double> plane(twice.data.begin() + c * 48 * 32, twice.data.begin() + (c + 1) * 48 * 32);
    const auto back = resize_bilinear(plane, 48, 32, 24, 16);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 24; ++x) worst = std::max(worst, std::abs(back[y * 24 + x] - direct.at(c, y, x)));
  }
  o.require(worst <= 1.0, fmt("2x-and-back within %.2f levels", worst));
  return o;
}

// CLI and service.

int run_cli(const std::string& args, std::string* stdout_text = nullptr) {
  const fs::path capture = fs::temp_directory_path() / "tfold_acceptance_stdout.txt";
  const std::string cmd = std::string(TFOLD_CLI) + " " + args + " > " + capture.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  if (stdout_text) *stdout_text = read_file(capture.string());
  fs::remove(capture);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool same_files(const fs::path& a, const fs::path& b) {
  if (fs::is_directory(a)) {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(a)) {
      ++n;
      if (!fs::exists(b / e.path().filename()) || !same_files(e.path(), b / e.path().filename())) return false;
    }
    return n == static_cast<std::size_t>(std::distance(fs::directory_iterator(b), fs::directory_iterator{}));
  }
  return read_file(a.string()) == read_file(b.string());
}

Outcome cli_service() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / "tfold_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cfg = source("configs/reference_scene.json");
  auto p = [&](const std::string& name) { return (dir / name).string(); };

  bool ok = run_cli("trace --config " + cfg + " --out " + p("t1")) == 0;
  Service service(reference());
  const int port = service.bind("127.0.0.1", 0);
  std::thread server([&] { service.run(); });
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(60, 0);
  httplib::Result res;
  for (int i = 0; i < 100 && !(res = client.Post("/api/trace", "", "application/json")); ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  service.stop();
  server.join();
  bool same_metrics = false;
  if (ok && res && res->status == 200) {
    const auto body = nlohmann::json::parse(res->body);
    same_metrics = body["metrics_table"].get<std::string>() == read_file(p("t1_metrics.tsv")) &&
                   body["summary"] == nlohmann::json::parse(read_file(p("t1_summary.json")));
  }
  o.require(same_metrics, "trace metrics identical between CLI and POST /api/trace");

  struct Command {
    std::string name;
    std::string args_a;
    std::string args_b;
    std::vector<std::pair<std::string, std::string>> outputs;
  };
  const std::vector<Command> commands{
      {"trace", "trace --config " + cfg + " --out " + p("t1"), "trace --config " + cfg + " --out " + p("t2"),
       {{"t1.svg", "t2.svg"}, {"t1_metrics.tsv", "t2_metrics.tsv"}, {"t1_summary.json", "t2_summary.json"}}},
      {"optimize", "optimize --config " + cfg + " --budget 120 --seed 3 --out " + p("o1"),
       "optimize --config " + cfg + " --budget 120 --seed 3 --out " + p("o2"),
       {{"o1_history.tsv", "o2_history.tsv"}, {"o1_best.json", "o2_best.json"}}},
      {"generate", "proprio generate --count 60 --noise 4 --seed 9 --out " + p("d1"),
       "proprio generate --count 60 --noise 4 --seed 9 --out " + p("d2"), {{"d1", "d2"}}},
      {"train", "proprio train --epochs 3 --seed 5 --augment --data " + p("d1") + " --out " + p("m1.bin"),
       "proprio train --epochs 3 --seed 5 --augment --data " + p("d1") + " --out " + p("m2.bin"),
       {{"m1.bin", "m2.bin"}, {"m1.bin.loss.tsv", "m2.bin.loss.tsv"}}},
      {"eval", "proprio eval --data " + p("d1") + " --model " + p("m1.bin") + " --out " + p("e1"),
       "proprio eval --data " + p("d1") + " --model " + p("m1.bin") + " --out " + p("e2"),
       {{"e1_summary.json", "e2_summary.json"}, {"e1_predictions.tsv", "e2_predictions.tsv"}}},
  };
  std::string identical;
  std::string differing;
  for (const Command& c : commands) {
    std::string out_a;
    std::string out_b;
    bool same = run_cli(c.args_a, &out_a) == 0 && run_cli(c.args_b, &out_b) == 0 && out_a == out_b;
    for (const auto& [a, b] : c.outputs) same = same && fs::exists(p(a)) && same_files(p(a), p(b));
    (same ? identical : differing) += (same ? identical.empty() : differing.empty()) ? c.name : " " + c.name;
  }
  o.require(differing.empty(), "byte-identical reruns: " + identical + (differing.empty() ? "" : ", differing: " + differing));
  fs::remove_all(dir);
  return o;
}

}  // namespace

int main() {
  criterion(1, 1.0, fov);
  criterion(2, 5.0, reference_scene);
  criterion(3, 30.0, geometry_oracles);
  criterion(4, 5.0, reversibility);
  criterion(5, 120.0, optimizer);
  criterion(6, 600.0, proprioception);
  criterion(7, 10.0, imaging);
  criterion(8, 0.0, cli_service);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
