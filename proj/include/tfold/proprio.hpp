// Proprioception: bending and twisting torques from a contact wrench, a
// small-deflection backbone model that moves the two LED strips, and a
// synthetic renderer of the camera's view of those strips.
//
// Finger frame: origin at the finger base, x along the finger (base to tip),
// z the outward skin normal, y = z cross x. Bending is the moment about y and
// twisting the moment about x, both in N*mm.

#ifndef TFOLD_PROPRIO_HPP
#define TFOLD_PROPRIO_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tfold/imaging.hpp"

namespace tfold {

class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct Torques {
  double bending = 0.0;
  double twisting = 0.0;
};

/// tau = p x F; bending = tau . y, twisting = tau . x.
Torques torques_from_wrench(const Eigen::Vector3d& contact_point, const Eigen::Vector3d& force);

struct Wrench {
  Eigen::Vector3d contact_point;
  Eigen::Vector3d force;
};

/// Both poses map their local frame into a shared world frame. The contact
/// point is mapped by finger_pose^-1 * probe_pose, the force by the rotation
/// part only. Throws ValidationError naming the pose that is not rigid
/// (orthonormal rotation with det +1 to within 1e-9, bottom row 0 0 0 1).
Wrench transform_to_finger_frame(const Eigen::Matrix4d& probe_pose, const Eigen::Matrix4d& finger_pose,
                                 const Eigen::Vector3d& force_in_probe, const Eigen::Vector3d& contact_in_probe);

struct BackboneModel {
  double length = 60.0;          // mm
  double bending_stiffness = 4.0e4;    // EI, N*mm^2
  double torsional_stiffness = 8.0e3;  // GJ, N*mm^2/rad
  double strip_offset = 5.0;     // h, lateral offset of each strip, mm
  double px_per_mm = 1.5;        // image scale at the strips
  int stations = 20;
  /// Small-deflection regime, |torque| in N*mm.
  double max_bending = 300.0;
  double max_twisting = 300.0;

  void validate() const;
};

/// Per-station image-row displacements (px). The camera sees the backbone
/// edge-on, so bending and the twist-induced out-of-plane motion both move
/// the strips along image rows; strip A moves by bending + twist and strip B
/// by bending - twist.
struct LedDisplacements {
  std::vector<double> station_mm;
  std::vector<double> bending_px;
  std::vector<double> twist_px;

  double strip_a(std::size_t j) const { return bending_px[j] + twist_px[j]; }
  double strip_b(std::size_t j) const { return bending_px[j] - twist_px[j]; }
};

/// delta(s) = M s^2 / (2 EI) * k, lambda(s) = T s / GJ * h * k at stations
/// s_j = L j / (m - 1). Throws RangeError outside the configured regime.
LedDisplacements deflect_leds(const BackboneModel& model, double bending, double twisting);

/// Uniform displacement of both strips by the same number of rows.
LedDisplacements uniform_displacement(const BackboneModel& model, double rows);

/// Geometry of the synthetic LED view. Strip A is drawn in red, strip B in
/// green; each has a trapezoidal cross-profile (flat core of half-width
/// half_width - 0.5, one-pixel linear ramps) whose row centroid is exactly the
/// strip center. Station j sits at column coordinate 0.5 + (width - 1) j / (m - 1).
struct LedCamera {
  int width = 96;
  int height = 80;
  double row_a = 20.0;
  double row_b = 60.0;
  double half_width = 1.5;
  int intensity = 200;
  int background = 20;
  /// Height of each cropped LED region, centered on its strip's rest row.
  int region_height = 32;
  int input_width = 48;

  Rect region_a() const;
  Rect region_b() const;
};

/// Renders both strips. With noise_sigma > 0, adds seeded Gaussian noise (in
/// intensity levels) to every channel before rounding and clamping.
Frame render_synthetic_frame(const BackboneModel& model, const LedCamera& camera, const LedDisplacements& displacements,
                             double noise_sigma = 0.0, std::uint64_t seed = 0);

/// The noiseless, undisplaced view.
Frame reference_frame(const BackboneModel& model, const LedCamera& camera);

/// A fingertip press seen by the camera: a paraboloid bump of the given depth
/// (intensity levels) added to the red channel of the reference view.
struct PressRender {
  Frame frame;
  Frame reference;
  std::vector<std::uint8_t> mask;  // 1 where the bump changed a pixel
};

PressRender render_press(const BackboneModel& model, const LedCamera& camera, double center_x, double center_y,
                         double radius, int depth);

/// The two-channel regressor input: color difference against the reference,
/// LED regions cropped and resized to input_width, scaled by 1/255.
PlanarImage prepare_input(const Frame& frame, const Frame& reference, const LedCamera& camera);

struct TorqueSample {
  Frame frame;
  Torques torques;
};

struct TorqueDataset {
  Frame reference;
  std::vector<TorqueSample> samples;
};

struct DatasetOptions {
  int count = 2000;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
  double bending_mean = -62.4;
  double bending_std = 28.3;
  double twisting_mean = 5.4;
  double twisting_std = 27.3;
};

/// Torques drawn from independent Gaussians. Draws outside the model's regime,
/// or that would push a strip within a pixel of its crop region's edge, are
/// redrawn.
TorqueDataset generate_dataset(const BackboneModel& model, const LedCamera& camera, const DatasetOptions& options);

/// Directory layout: reference.ppm, sample_NNNNNN.ppm, index.tsv
/// (filename, bending_Nmm, twisting_Nmm).
void save_dataset(const std::string& directory, const TorqueDataset& dataset);
TorqueDataset load_dataset(const std::string& directory);

}  // namespace tfold

#endif  // TFOLD_PROPRIO_HPP
