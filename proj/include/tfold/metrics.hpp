// Design scores for a traced scene: skin coverage, imaging-angle profile, and
// spatial resolution (px/mm) along the skin.

#ifndef TFOLD_METRICS_HPP
#define TFOLD_METRICS_HPP

#include <span>
#include <vector>

#include "tfold/geometry.hpp"
#include "tfold/scene.hpp"

namespace tfold {

/// Arc length from the start of a curve, with per-knot-span lengths cached
/// so each query integrates at most one partial span.
class ArcLengthTable {
 public:
  explicit ArcLengthTable(const Geometry& curve, double tolerance = 1e-6);
  double total() const { return total_; }
  double at(double t) const;

 private:
  const Geometry* curve_;
  double tolerance_;
  std::vector<double> breaks_;
  std::vector<double> cumulative_;
  double total_ = 0.0;
};

struct ProfilePoint {
  int pixel_index;
  double arc_position_mm;
  double value;
};

struct DesignMetrics {
  double coverage = 0.0;
  std::vector<ProfilePoint> imaging_angle_profile;  // degrees
  std::vector<ProfilePoint> resolution_profile;     // px/mm
  double min_imaging_angle = 0.0;                   // degrees; 0 when no hits
  int skin_hits = 0;
  int pixel_count = 0;
  double skin_length_mm = 0.0;
  double bottom_px_per_mm = 0.0;
  double tip_px_per_mm = 0.0;
};

/// Fraction of skin arc length within reach of the pixel rays. A stretch of
/// skin between two neighboring hits (or between a hit and a skin end) counts
/// as covered when it is no longer than twice the local arc spacing between
/// consecutive-pixel hits.
double coverage(std::span<const TraceResult> traces, const Geometry& skin);

std::vector<ProfilePoint> imaging_angles(std::span<const TraceResult> traces, const Geometry& skin);

/// Central-differenced pixel spacing over arc spacing at every hit. Neighbors
/// are only differenced when they followed the same sequence of surfaces.
/// Throws DomainError with fewer than two skin hits.
std::vector<ProfilePoint> resolution_profile(std::span<const TraceResult> traces, const Geometry& skin,
                                             double pixels_per_ray = 1.0);

struct ResolutionEnds {
  double bottom;
  double tip;
};

/// Mean px/mm over the first and the last `fraction` of the skin arc length.
ResolutionEnds resolution_at_ends(std::span<const ProfilePoint> profile, double skin_length, double fraction = 0.1);

DesignMetrics compute_metrics(const SensorScene& scene, std::span<const TraceResult> traces);

}  // namespace tfold

#endif  // TFOLD_METRICS_HPP
