#include "tfold/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace tfold {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
// A ray leaving a surface ignores that same surface closer than this.
constexpr double kSelfHitDistance = 1e-6;

struct NearestHit {
  SurfaceHit hit;
  int surface;
};

std::optional<NearestHit> nearest_hit(const SensorScene& scene, const Ray& ray, int last_surface, bool ignore_skin) {
  std::optional<NearestHit> best;
  auto offer = [&](const Geometry& geometry, int id) {
    const double min_t = id == last_surface ? kSelfHitDistance : kMinRayDistance;
    const auto hit = intersect(ray, geometry, min_t);
    if (hit && (!best || hit->t_ray < best->hit.t_ray)) best = NearestHit{*hit, id};
  };
  for (std::size_t i = 0; i < scene.surfaces.size(); ++i) offer(scene.surfaces[i].geometry, static_cast<int>(i));
  if (!ignore_skin) offer(scene.skin, kSkinSurfaceId);
  return best;
}

bool same_vertex(const PathVertex& a, const PathVertex& b) {
  return a.point == b.point && a.direction == b.direction && a.medium_index == b.medium_index &&
         a.surface == b.surface;
}

}  // namespace

void Camera::validate() const {
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw ValidationError("fov_deg", "must be in (0, 180)");
  if (pixel_count < 2) throw ValidationError("pixel_count", "must be at least 2");
  if (!std::isfinite(pinhole.x) || !std::isfinite(pinhole.y)) throw ValidationError("pinhole", "must be finite");
}

Dir2 Camera::pixel_direction(int pixel_index) const {
  const double offset = -0.5 * fov_deg + fov_deg * pixel_index / (pixel_count - 1);
  return Dir2::from_angle(boresight.angle() + offset * kDegToRad);
}

double Camera::pixel_pitch() const { return fov_deg * kDegToRad / (pixel_count - 1); }

void SensorScene::validate() const {
  camera.validate();
  if (!(envelope.length > 0.0)) throw ValidationError("envelope.length", "must be positive");
  if (!(envelope.width > 0.0)) throw ValidationError("envelope.width", "must be positive");
  if (!(envelope.thickness > 0.0)) throw ValidationError("envelope.thickness", "must be positive");
  if (!(camera_medium_index >= 1.0)) throw ValidationError("camera_medium_index", "must be at least 1");
  for (const auto& s : surfaces) {
    if (const auto* r = std::get_if<Refractive>(&s.kind)) {
      if (!(r->n_inside >= 1.0) || !(r->n_outside >= 1.0))
        throw ValidationError(s.name, "refractive indices must be at least 1");
    }
  }
}

const char* to_string(Terminal terminal) {
  switch (terminal) {
    case Terminal::SkinHit: return "skin_hit";
    case Terminal::Escaped: return "escaped";
    case Terminal::Absorbed: return "absorbed";
    case Terminal::TotalInternalReflection: return "tir";
    case Terminal::MaxBounces: return "max_bounces";
  }
  return "unknown";
}

bool TraceResult::operator==(const TraceResult& other) const {
  if (pixel_index != other.pixel_index || terminal != other.terminal || path.size() != other.path.size())
    return false;
  if (skin_hit.has_value() != other.skin_hit.has_value()) return false;
  if (skin_hit &&
      (skin_hit->t_skin != other.skin_hit->t_skin || skin_hit->imaging_angle != other.skin_hit->imaging_angle))
    return false;
  return std::equal(path.begin(), path.end(), other.path.begin(), same_vertex);
}

TraceResult propagate(const SensorScene& scene, const Ray& ray, int max_interactions, bool ignore_skin,
                      int launch_surface) {
  TraceResult result;
  result.path.push_back({ray.origin, ray.direction, ray.medium_index, launch_surface});
  Point2 origin = ray.origin;
  Dir2 direction = ray.direction;
  double index = ray.medium_index;
  int last = launch_surface;
  int interactions = 0;
  bool last_was_tir = false;

  while (true) {
    const auto nearest = nearest_hit(scene, Ray(origin, direction, index), last, ignore_skin);
    if (!nearest) {
      result.terminal = Terminal::Escaped;
      return result;
    }
    const SurfaceHit& hit = nearest->hit;
    if (nearest->surface == kSkinSurfaceId) {
      const Frame2 frame = tangent_normal(scene.skin, hit.t_surface);
      const double s = std::min(1.0, std::abs(dot(direction, frame.normal)));
      result.path.push_back({hit.point, direction, index, kSkinSurfaceId});
      result.terminal = Terminal::SkinHit;
      result.skin_hit = SkinHit{hit.t_surface, std::asin(s)};
      return result;
    }

    const OpticalSurface& surface = scene.surfaces[static_cast<std::size_t>(nearest->surface)];
    if (std::holds_alternative<Absorbing>(surface.kind)) {
      result.path.push_back({hit.point, direction, index, nearest->surface});
      result.terminal = Terminal::Absorbed;
      return result;
    }
    if (interactions >= max_interactions) {
      result.terminal = last_was_tir ? Terminal::TotalInternalReflection : Terminal::MaxBounces;
      return result;
    }

    const Frame2 frame = tangent_normal(surface.geometry, hit.t_surface);
    if (std::holds_alternative<Reflective>(surface.kind)) {
      direction = reflect(direction, frame.normal);
      last_was_tir = false;
    } else {
      const auto& r = std::get<Refractive>(surface.kind);
      const bool entering_inside = dot(direction, frame.normal) > 0.0;
      const double n_from = entering_inside ? r.n_outside : r.n_inside;
      const double n_to = entering_inside ? r.n_inside : r.n_outside;
      const RefractionResult refracted = refract(direction, frame.normal, n_from, n_to);
      if (const auto* t = std::get_if<Dir2>(&refracted)) {
        direction = *t;
        index = n_to;
        last_was_tir = false;
      } else {
        direction = reflect(direction, frame.normal);
        index = n_from;
        last_was_tir = true;
      }
    }
    ++interactions;
    origin = hit.point;
    last = nearest->surface;
    result.path.push_back({origin, direction, index, last});
  }
}

TraceResult trace_pixel(const SensorScene& scene, int pixel_index) {
  if (pixel_index < 0 || pixel_index >= scene.camera.pixel_count)
    throw DomainError("pixel index " + std::to_string(pixel_index) + " outside [0, " +
                      std::to_string(scene.camera.pixel_count) + ")");
  const Ray ray(scene.camera.pinhole, scene.camera.pixel_direction(pixel_index), scene.camera_medium_index);
  TraceResult result = propagate(scene, ray, kMaxBounces);
  result.pixel_index = pixel_index;
  return result;
}

std::vector<TraceResult> trace_all(const SensorScene& scene) {
  const int count = scene.camera.pixel_count;
  std::vector<TraceResult> results(static_cast<std::size_t>(count));
  // Exceptions must not escape an OpenMP region; capture the first one.
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < count; ++i) {
    try {
      results[static_cast<std::size_t>(i)] = trace_pixel(scene, i);
    } catch (...) {
#pragma omp critical(tfold_trace_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

std::vector<TraceResult> trace_all_serial(const SensorScene& scene) {
  std::vector<TraceResult> results;
  results.reserve(static_cast<std::size_t>(scene.camera.pixel_count));
  for (int i = 0; i < scene.camera.pixel_count; ++i) results.push_back(trace_pixel(scene, i));
  return results;
}

std::vector<Point2> retrace_reversed(const SensorScene& scene, const TraceResult& forward) {
  if (forward.terminal != Terminal::SkinHit || forward.path.size() < 2)
    throw DomainError("only skin-hit traces can be reversed");
  const PathVertex& end = forward.path.back();
  const int interactions = static_cast<int>(forward.path.size()) - 2;
  const Ray back(end.point, -end.direction, end.medium_index);
  const TraceResult reversed = propagate(scene, back, interactions, true, kSkinSurfaceId);

  std::vector<Point2> points;
  const std::size_t keep = std::min(reversed.path.size(), static_cast<std::size_t>(interactions) + 1);
  for (std::size_t i = 0; i < keep; ++i) points.push_back(reversed.path[i].point);
  const PathVertex& last = reversed.path[keep - 1];
  const double along = std::max(0.0, dot(last.direction, scene.camera.pinhole - last.point));
  points.push_back(last.point + last.direction.vec() * along);
  return points;
}

double effective_fov(const SensorScene& scene) {
  const OpticalSurface* interface = nullptr;
  for (const auto& s : scene.surfaces) {
    if (!std::holds_alternative<Refractive>(s.kind)) continue;
    if (interface) throw DomainError("effective_fov needs exactly one refractive surface");
    interface = &s;
  }
  if (!interface) throw DomainError("effective_fov needs exactly one refractive surface");
  const auto& r = std::get<Refractive>(interface->kind);
  const Dir2 boresight = scene.camera.boresight;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < scene.camera.pixel_count; ++i) {
    const Ray ray(scene.camera.pinhole, scene.camera.pixel_direction(i), scene.camera_medium_index);
    const auto hit = intersect(ray, interface->geometry);
    if (!hit) continue;
    const Frame2 frame = tangent_normal(interface->geometry, hit->t_surface);
    const bool entering_inside = dot(ray.direction, frame.normal) > 0.0;
    const double n_from = entering_inside ? r.n_outside : r.n_inside;
    const double n_to = entering_inside ? r.n_inside : r.n_outside;
    const RefractionResult out = refract(ray.direction, frame.normal, n_from, n_to);
    const auto* t = std::get_if<Dir2>(&out);
    if (!t) continue;
    const double angle = std::atan2(cross(boresight.vec(), t->vec()), dot(boresight, *t));
    lo = std::min(lo, angle);
    hi = std::max(hi, angle);
  }
  if (!(hi >= lo)) throw DomainError("no pixel ray crosses the refractive interface");
  return (hi - lo) * kRadToDeg;
}

}  // namespace tfold
