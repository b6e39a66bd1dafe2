#include "tfold/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace tfold {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

struct HitRecord {
  std::size_t trace;  // index into the traces span
  int pixel;
  double s;
  const std::vector<PathVertex>* path;
};

bool same_route(const HitRecord& a, const HitRecord& b) {
  const auto& pa = *a.path;
  const auto& pb = *b.path;
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (pa[i].surface != pb[i].surface) return false;
  return true;
}

// Hits in trace (pixel) order.
std::vector<HitRecord> collect_hits(std::span<const TraceResult> traces, const ArcLengthTable& table) {
  std::vector<HitRecord> hits;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto& tr = traces[i];
    if (!tr.skin_hit) continue;
    hits.push_back({i, tr.pixel_index, table.at(tr.skin_hit->t_skin), &tr.path});
  }
  return hits;
}

}  // namespace

ArcLengthTable::ArcLengthTable(const Geometry& curve, double tolerance) : curve_(&curve), tolerance_(tolerance) {
  const auto [a, b] = parameter_domain(curve);
  breaks_.push_back(a);
  if (const auto* spline = std::get_if<BSplineCurve>(&curve)) {
    for (const auto& piece : spline->bezier_pieces()) breaks_.push_back(piece.t1);
  } else {
    breaks_.push_back(b);
  }
  cumulative_.push_back(0.0);
  const double per_span = tolerance / static_cast<double>(breaks_.size());
  for (std::size_t i = 0; i + 1 < breaks_.size(); ++i)
    cumulative_.push_back(cumulative_.back() + arc_length(curve, breaks_[i], breaks_[i + 1], per_span));
  total_ = cumulative_.back();
}

double ArcLengthTable::at(double t) const {
  const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
  std::size_t span = it == breaks_.begin() ? 0 : static_cast<std::size_t>(std::distance(breaks_.begin(), it)) - 1;
  span = std::min(span, breaks_.size() - 2);
  const double partial = arc_length(*curve_, breaks_[span], t, tolerance_);
  return std::clamp(cumulative_[span] + partial, 0.0, total_);
}

double coverage(std::span<const TraceResult> traces, const Geometry& skin) {
  const ArcLengthTable table(skin);
  std::vector<HitRecord> hits = collect_hits(traces, table);
  if (hits.empty() || !(table.total() > 0.0)) return 0.0;

  // Local spacing: smallest arc step to a consecutive-pixel hit on the same route.
  std::vector<double> spacing(hits.size(), 0.0);
  for (std::size_t i = 0; i < hits.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j : {i - 1, i + 1}) {
      if (j >= hits.size()) continue;
      if (std::abs(hits[j].pixel - hits[i].pixel) != 1 || !same_route(hits[i], hits[j])) continue;
      best = std::min(best, std::abs(hits[j].s - hits[i].s));
    }
    spacing[i] = std::isfinite(best) ? best : 0.0;
  }

  std::vector<std::size_t> order(hits.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return hits[a].s < hits[b].s; });

  const double total = table.total();
  double covered = 0.0;
  const std::size_t first = order.front();
  const std::size_t last = order.back();
  if (hits[first].s <= 2.0 * spacing[first]) covered += hits[first].s;
  for (std::size_t k = 0; k + 1 < order.size(); ++k) {
    const std::size_t a = order[k];
    const std::size_t b = order[k + 1];
    const double gap = hits[b].s - hits[a].s;
    if (gap <= 2.0 * std::max(spacing[a], spacing[b])) covered += gap;
  }
  if (total - hits[last].s <= 2.0 * spacing[last]) covered += total - hits[last].s;
  return std::clamp(covered / total, 0.0, 1.0);
}

std::vector<ProfilePoint> imaging_angles(std::span<const TraceResult> traces, const Geometry& skin) {
  const ArcLengthTable table(skin);
  std::vector<ProfilePoint> out;
  for (const auto& tr : traces) {
    if (!tr.skin_hit) continue;
    out.push_back({tr.pixel_index, table.at(tr.skin_hit->t_skin), tr.skin_hit->imaging_angle * kRadToDeg});
  }
  return out;
}

std::vector<ProfilePoint> resolution_profile(std::span<const TraceResult> traces, const Geometry& skin,
                                             double pixels_per_ray) {
  const ArcLengthTable table(skin);
  const std::vector<HitRecord> hits = collect_hits(traces, table);
  if (hits.size() < 2) throw DomainError("resolution profile needs at least two skin hits");

  std::vector<ProfilePoint> out;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const bool has_prev = i > 0 && same_route(hits[i - 1], hits[i]);
    const bool has_next = i + 1 < hits.size() && same_route(hits[i + 1], hits[i]);
    if (!has_prev && !has_next) continue;
    const HitRecord& lo = has_prev ? hits[i - 1] : hits[i];
    const HitRecord& hi = has_next ? hits[i + 1] : hits[i];
    const double ds = std::abs(hi.s - lo.s);
    if (!(ds > 0.0)) continue;
    out.push_back({hits[i].pixel, hits[i].s, pixels_per_ray * (hi.pixel - lo.pixel) / ds});
  }
  return out;
}

ResolutionEnds resolution_at_ends(std::span<const ProfilePoint> profile, double skin_length, double fraction) {
  double bottom_sum = 0.0;
  double tip_sum = 0.0;
  int bottom_n = 0;
  int tip_n = 0;
  for (const auto& p : profile) {
    if (p.arc_position_mm <= fraction * skin_length) {
      bottom_sum += p.value;
      ++bottom_n;
    }
    if (p.arc_position_mm >= (1.0 - fraction) * skin_length) {
      tip_sum += p.value;
      ++tip_n;
    }
  }
  return {bottom_n ? bottom_sum / bottom_n : 0.0, tip_n ? tip_sum / tip_n : 0.0};
}

DesignMetrics compute_metrics(const SensorScene& scene, std::span<const TraceResult> traces) {
  DesignMetrics m;
  m.pixel_count = static_cast<int>(traces.size());
  m.skin_length_mm = ArcLengthTable(scene.skin).total();
  m.coverage = coverage(traces, scene.skin);
  m.imaging_angle_profile = imaging_angles(traces, scene.skin);
  m.skin_hits = static_cast<int>(m.imaging_angle_profile.size());
  if (!m.imaging_angle_profile.empty()) {
    m.min_imaging_angle = std::min_element(m.imaging_angle_profile.begin(), m.imaging_angle_profile.end(),
                                           [](const auto& a, const auto& b) { return a.value < b.value; })
                              ->value;
  }
  if (m.skin_hits >= 2) {
    m.resolution_profile = resolution_profile(traces, scene.skin);
    const auto ends = resolution_at_ends(m.resolution_profile, m.skin_length_mm);
    m.bottom_px_per_mm = ends.bottom;
    m.tip_px_per_mm = ends.tip;
  }
  return m;
}

}  // namespace tfold
