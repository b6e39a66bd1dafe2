// The sensor world seen in the finger's sagittal cross-section: a pinhole
// camera in an air pocket, a refractive gel dome, mirrors, and the sensing
// skin. Pixel rays are traced forward from the camera through the folded
// optical path.

#ifndef TFOLD_SCENE_HPP
#define TFOLD_SCENE_HPP

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tfold/geometry.hpp"

namespace tfold {

struct Camera {
  Point2 pinhole;
  Dir2 boresight = Dir2::from_angle(0.0);
  double fov_deg = 120.0;
  int pixel_count = 1080;

  /// Throws ValidationError unless 0 < fov < 180 and pixel_count >= 2.
  void validate() const;
  /// Pixels are fanned uniformly in angle; pixel 0 sits at boresight - fov/2.
  Dir2 pixel_direction(int pixel_index) const;
  /// Angular step between neighboring pixels, radians.
  double pixel_pitch() const;
};

struct Reflective {};
struct Absorbing {};
/// Indices on either side; "inside" is the side the surface normal points to.
struct Refractive {
  double n_inside = 1.0;
  double n_outside = 1.0;
};
using SurfaceKind = std::variant<Reflective, Refractive, Absorbing>;

struct OpticalSurface {
  std::string name;
  Geometry geometry;
  SurfaceKind kind;
};

struct Envelope {
  double length = 83.5;
  double width = 22.7;
  double thickness = 18.8;
};

struct SensorScene {
  Camera camera;
  std::vector<OpticalSurface> surfaces;
  Geometry skin = LineSegment({0.0, 0.0}, {1.0, 0.0});
  Envelope envelope;
  /// Refractive index of the medium around the pinhole.
  double camera_medium_index = 1.0;

  void validate() const;
};

enum class Terminal { SkinHit, Escaped, Absorbed, TotalInternalReflection, MaxBounces };

const char* to_string(Terminal terminal);

inline constexpr int kSkinSurfaceId = -2;
inline constexpr int kPinholeId = -1;

struct PathVertex {
  Point2 point;
  /// Direction leaving this vertex (for the terminal skin vertex: arriving).
  Dir2 direction;
  double medium_index;
  /// Index into SensorScene::surfaces, kSkinSurfaceId, or kPinholeId.
  int surface;
};

struct SkinHit {
  double t_skin;
  /// Angle between the arriving ray and the skin tangent, in (0, pi/2].
  double imaging_angle;
};

struct TraceResult {
  int pixel_index = 0;
  std::vector<PathVertex> path;
  Terminal terminal = Terminal::Escaped;
  std::optional<SkinHit> skin_hit;

  bool operator==(const TraceResult& other) const;
};

inline constexpr int kMaxBounces = 16;

TraceResult trace_pixel(const SensorScene& scene, int pixel_index);

/// One result per pixel in pixel order. Pixels are traced in parallel with
/// OpenMP; the output does not depend on the schedule.
std::vector<TraceResult> trace_all(const SensorScene& scene);
/// Single-threaded reference for trace_all.
std::vector<TraceResult> trace_all_serial(const SensorScene& scene);

/// Traces a ray launched anywhere in the scene for at most `max_interactions`
/// surface interactions. Used for reversibility checks; `ignore_skin` lets a
/// reversed ray pass back out through the skin region.
TraceResult propagate(const SensorScene& scene, const Ray& ray, int max_interactions, bool ignore_skin = false,
                      int launch_surface = kPinholeId);

/// Reverses a SkinHit trace: launches from the skin point back along the
/// arriving direction and returns the visited points, ending with the point
/// on the final segment closest to the pinhole.
std::vector<Point2> retrace_reversed(const SensorScene& scene, const TraceResult& forward);

/// Angular width, in degrees and measured inside the gel, between the
/// outermost pixel rays after they cross the scene's single refractive
/// surface. Throws DomainError when the scene does not have exactly one
/// refractive surface or when no pixel ray gets through.
double effective_fov(const SensorScene& scene);

}  // namespace tfold

#endif  // TFOLD_SCENE_HPP
