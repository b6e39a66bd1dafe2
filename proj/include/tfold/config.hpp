// Scene configuration files: a strict JSON dialect with a canonical emitted
// form. Unknown keys are rejected, and every validation error names the
// offending field as a JSON pointer (e.g. "/camera/fov_deg").
//
// Layout of a scene file (canonical key order):
//
//   {
//     "units": "mm",
//     "camera":   {"pinhole": [x, y], "boresight_deg": a, "fov_deg": 120.0, "pixel_count": 1080},
//     "gel":      {"refractive_index": 1.41, "dome": {"center": [x, y], "radius": 3.5}},
//     "surfaces": [{"name": "...", "kind": "reflective" | "absorbing" | "refractive",
//                   "n_inside": .., "n_outside": ..,            (refractive only)
//                   "geometry": GEOMETRY}, ...],
//     "skin":     GEOMETRY,
//     "envelope": {"length": 83.5, "width": 22.7, "thickness": 18.8}
//   }
//
//   GEOMETRY := {"type": "bspline", "degree": 3, "control_points": [[x, y], ...],
//                "knots": [...], "fixed_points": [i, ...]}
//             | {"type": "arc", "center": [x, y], "radius": r, "start_deg": a, "span_deg": s}
//             | {"type": "segment", "from": [x, y], "to": [x, y]}
//
// Optional on input: camera.fov_deg (120), camera.pixel_count (1080), the
// whole gel block, gel.refractive_index (1.41), dome.radius (3.5), bspline
// degree (3), knots (clamped uniform), fixed_points (skin: both ends,
// surfaces: none), envelope (83.5 x 22.7 x 18.8). The canonical form spells
// every field out.

#ifndef TFOLD_CONFIG_HPP
#define TFOLD_CONFIG_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "tfold/geometry.hpp"
#include "tfold/scene.hpp"

namespace tfold {

/// Malformed text; the message carries line and column.
class ConfigSyntaxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SplineSpec {
  int degree = 3;
  std::vector<Point2> control_points;
  std::vector<double> knots;
  std::vector<int> fixed_points;
};

struct ArcSpec {
  Point2 center;
  double radius = 1.0;
  double start_deg = 0.0;
  double span_deg = 180.0;
};

struct SegmentSpec {
  Point2 from;
  Point2 to;
};

using GeometrySpec = std::variant<SplineSpec, ArcSpec, SegmentSpec>;

struct SurfaceSpec {
  std::string name;
  SurfaceKind kind;
  GeometrySpec geometry;
};

struct DomeSpec {
  Point2 center;
  double radius = 3.5;
};

struct GelSpec {
  double refractive_index = 1.41;
  std::optional<DomeSpec> dome;
};

struct SceneConfig {
  Point2 pinhole;
  double boresight_deg = 0.0;
  double fov_deg = 120.0;
  int pixel_count = 1080;
  std::optional<GelSpec> gel;
  std::vector<SurfaceSpec> surfaces;
  GeometrySpec skin;
  Envelope envelope;

  /// Builds and validates the scene. The dome, when present, becomes a
  /// refractive hemisphere facing the boresight, appended after the listed
  /// surfaces under the name "dome".
  SensorScene to_scene() const;
};

Geometry build_geometry(const GeometrySpec& spec);

SceneConfig parse_scene_config(const std::string& text);
std::string emit_scene_config(const SceneConfig& config);

/// parse_scene_config(text).to_scene()
SensorScene parse_scene(const std::string& text);

SceneConfig load_scene_config(const std::string& path);

}  // namespace tfold

#endif  // TFOLD_CONFIG_HPP
