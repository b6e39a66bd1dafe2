#include "tfold/proprio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

#include "tfold/geometry.hpp"
#include "tfold/io.hpp"

namespace tfold {

namespace {

constexpr double kRigidTolerance = 1e-9;

void check_rigid(const Eigen::Matrix4d& pose, const char* name) {
  const Eigen::Matrix3d r = pose.topLeftCorner<3, 3>();
  const double orth = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  const bool bottom = pose(3, 0) == 0.0 && pose(3, 1) == 0.0 && pose(3, 2) == 0.0 && pose(3, 3) == 1.0;
  if (!pose.allFinite() || !bottom || !(orth <= kRigidTolerance) || !(std::abs(r.determinant() - 1.0) <= kRigidTolerance))
    throw ValidationError(name, "not a rigid transform");
}

double interpolate_offset(const std::vector<double>& offsets, double column_center, const LedCamera& camera) {
  const int m = static_cast<int>(offsets.size());
  if (m == 1) return offsets[0];
  const double pos = (column_center - 0.5) * (m - 1) / (camera.width - 1);
  const int j = std::clamp(static_cast<int>(std::floor(pos)), 0, m - 2);
  const double f = pos - j;
  return offsets[static_cast<std::size_t>(j)] + f * (offsets[static_cast<std::size_t>(j) + 1] - offsets[static_cast<std::size_t>(j)]);
}

// Fraction of a pixel row lit by a strip whose center is `d` rows away.
double strip_profile(double d, double half_width) { return std::clamp(half_width + 0.5 - std::abs(d), 0.0, 1.0); }

bool strips_visible(const LedDisplacements& d, const LedCamera& camera) {
  const double limit = camera.region_height / 2.0 - camera.half_width - 1.0;
  for (std::size_t j = 0; j < d.bending_px.size(); ++j)
    if (std::abs(d.strip_a(j)) > limit || std::abs(d.strip_b(j)) > limit) return false;
  return true;
}

std::string sample_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample_%06zu.ppm", i);
  return buf;
}

}  // namespace

Torques torques_from_wrench(const Eigen::Vector3d& contact_point, const Eigen::Vector3d& force) {
  const Eigen::Vector3d tau = contact_point.cross(force);
  return {tau.y(), tau.x()};
}

Wrench transform_to_finger_frame(const Eigen::Matrix4d& probe_pose, const Eigen::Matrix4d& finger_pose,
                                 const Eigen::Vector3d& force_in_probe, const Eigen::Vector3d& contact_in_probe) {
  check_rigid(probe_pose, "probe_pose");
  check_rigid(finger_pose, "finger_pose");
  const Eigen::Matrix3d rf = finger_pose.topLeftCorner<3, 3>();
  const Eigen::Vector3d tf = finger_pose.topRightCorner<3, 1>();
  const Eigen::Matrix3d rp = probe_pose.topLeftCorner<3, 3>();
  const Eigen::Vector3d tp = probe_pose.topRightCorner<3, 1>();
  const Eigen::Vector3d world_point = rp * contact_in_probe + tp;
  return {rf.transpose() * (world_point - tf), rf.transpose() * (rp * force_in_probe)};
}

void BackboneModel::validate() const {
  if (!(length > 0.0)) throw ValidationError("length", "must be positive");
  if (!(bending_stiffness > 0.0)) throw ValidationError("bending_stiffness", "must be positive");
  if (!(torsional_stiffness > 0.0)) throw ValidationError("torsional_stiffness", "must be positive");
  if (!(strip_offset > 0.0)) throw ValidationError("strip_offset", "must be positive");
  if (!(px_per_mm > 0.0)) throw ValidationError("px_per_mm", "must be positive");
  if (stations < 2) throw ValidationError("stations", "must be at least 2");
  if (!(max_bending > 0.0) || !(max_twisting > 0.0)) throw ValidationError("max_bending", "regime must be positive");
}

LedDisplacements deflect_leds(const BackboneModel& model, double bending, double twisting) {
  model.validate();
  if (!(std::abs(bending) <= model.max_bending))
    throw RangeError("bending torque " + std::to_string(bending) + " N*mm is outside the small-deflection regime");
  if (!(std::abs(twisting) <= model.max_twisting))
    throw RangeError("twisting torque " + std::to_string(twisting) + " N*mm is outside the small-deflection regime");
  LedDisplacements out;
  for (int j = 0; j < model.stations; ++j) {
    const double s = model.length * j / (model.stations - 1);
    out.station_mm.push_back(s);
    out.bending_px.push_back(bending * s * s / (2.0 * model.bending_stiffness) * model.px_per_mm);
    out.twist_px.push_back(twisting * s / model.torsional_stiffness * model.strip_offset * model.px_per_mm);
  }
  return out;
}

LedDisplacements uniform_displacement(const BackboneModel& model, double rows) {
  LedDisplacements out;
  for (int j = 0; j < model.stations; ++j) {
    out.station_mm.push_back(model.length * j / (model.stations - 1));
    out.bending_px.push_back(rows);
    out.twist_px.push_back(0.0);
  }
  return out;
}

Rect LedCamera::region_a() const {
  return {0, static_cast<int>(std::lround(row_a)) - region_height / 2, width, region_height};
}

Rect LedCamera::region_b() const {
  return {0, static_cast<int>(std::lround(row_b)) - region_height / 2, width, region_height};
}

Frame render_synthetic_frame(const BackboneModel& model, const LedCamera& camera, const LedDisplacements& displacements,
                             double noise_sigma, std::uint64_t seed) {
  (void)model;
  std::vector<double> off_a;
  std::vector<double> off_b;
  for (std::size_t j = 0; j < displacements.bending_px.size(); ++j) {
    off_a.push_back(displacements.strip_a(j));
    off_b.push_back(displacements.strip_b(j));
  }
  std::vector<double> level(static_cast<std::size_t>(camera.width) * camera.height * 3,
                            static_cast<double>(camera.background));
  for (int x = 0; x < camera.width; ++x) {
    const double cx = x + 0.5;
    const double ya = camera.row_a + interpolate_offset(off_a, cx, camera);
    const double yb = camera.row_b + interpolate_offset(off_b, cx, camera);
    for (int y = 0; y < camera.height; ++y) {
      const std::size_t at = (static_cast<std::size_t>(y) * camera.width + x) * 3;
      level[at] += camera.intensity * strip_profile(y + 0.5 - ya, camera.half_width);
      level[at + 1] += camera.intensity * strip_profile(y + 0.5 - yb, camera.half_width);
    }
  }
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (double& v : level) v += noise(rng);
  }
  Frame frame(camera.width, camera.height);
  for (std::size_t i = 0; i < level.size(); ++i)
    frame.data[i] = static_cast<std::uint8_t>(std::clamp(std::lround(level[i]), 0L, 255L));
  return frame;
}

Frame reference_frame(const BackboneModel& model, const LedCamera& camera) {
  return render_synthetic_frame(model, camera, uniform_displacement(model, 0.0));
}

PressRender render_press(const BackboneModel& model, const LedCamera& camera, double center_x, double center_y,
                         double radius, int depth) {
  PressRender out;
  out.reference = reference_frame(model, camera);
  out.frame = out.reference;
  out.mask.assign(static_cast<std::size_t>(camera.width) * camera.height, 0);
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const double dx = x + 0.5 - center_x;
      const double dy = y + 0.5 - center_y;
      const double r2 = (dx * dx + dy * dy) / (radius * radius);
      if (r2 >= 1.0) continue;
      const int bump = static_cast<int>(std::lround(depth * (1.0 - r2)));
      if (bump <= 0) continue;
      std::uint8_t& red = out.frame.at(x, y, 0);
      red = static_cast<std::uint8_t>(std::min(255, red + bump));
      out.mask[static_cast<std::size_t>(y) * camera.width + x] = 1;
    }
  }
  return out;
}

PlanarImage prepare_input(const Frame& frame, const Frame& reference, const LedCamera& camera) {
  PlanarImage image = crop_led_regions(color_difference(frame, reference), camera.region_a(), camera.region_b(),
                                       camera.input_width, camera.region_height);
  for (double& v : image.data) v /= 255.0;
  return image;
}

TorqueDataset generate_dataset(const BackboneModel& model, const LedCamera& camera, const DatasetOptions& options) {
  if (options.count < 0) throw DomainError("sample count must be non-negative");
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> bending(options.bending_mean, options.bending_std);
  std::normal_distribution<double> twisting(options.twisting_mean, options.twisting_std);
  TorqueDataset data;
  data.reference = reference_frame(model, camera);
  for (int i = 0; i < options.count; ++i) {
    Torques t;
    LedDisplacements d;
    do {
      t.bending = bending(rng);
      t.twisting = twisting(rng);
      d = {};
      if (std::abs(t.bending) > model.max_bending || std::abs(t.twisting) > model.max_twisting) continue;
      d = deflect_leds(model, t.bending, t.twisting);
    } while (d.bending_px.empty() || !strips_visible(d, camera));
    const std::uint64_t noise_seed = rng();
    data.samples.push_back({render_synthetic_frame(model, camera, d, options.noise_sigma, noise_seed), t});
  }
  return data;
}

void save_dataset(const std::string& directory, const TorqueDataset& dataset) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw IoError("cannot create " + directory + ": " + ec.message());
  const std::filesystem::path dir(directory);
  write_ppm((dir / "reference.ppm").string(), dataset.reference);
  std::string index = "filename\tbending_Nmm\ttwisting_Nmm\n";
  char line[128];
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const std::string name = sample_name(i);
    write_ppm((dir / name).string(), dataset.samples[i].frame);
    std::snprintf(line, sizeof line, "%s\t%.17g\t%.17g\n", name.c_str(), dataset.samples[i].torques.bending,
                  dataset.samples[i].torques.twisting);
    index += line;
  }
  write_file_atomic((dir / "index.tsv").string(), index);
}

TorqueDataset load_dataset(const std::string& directory) {
  const std::filesystem::path dir(directory);
  TorqueDataset data;
  data.reference = read_ppm((dir / "reference.ppm").string());
  std::istringstream index(read_file((dir / "index.tsv").string()));
  std::string line;
  std::getline(index, line);
  if (line != "filename\tbending_Nmm\ttwisting_Nmm") throw IoError("unexpected index header in " + directory);
  int row = 1;
  while (std::getline(index, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string name;
    TorqueSample sample;
    if (!(fields >> name >> sample.torques.bending >> sample.torques.twisting))
      throw IoError("malformed index row " + std::to_string(row) + " in " + directory);
    sample.frame = read_ppm((dir / name).string());
    data.samples.push_back(std::move(sample));
  }
  return data;
}

}  // namespace tfold
