// Planar geometric primitives for the folded-optics simulator: points,
// directions, B-spline curves, circular arcs, line segments and rays, plus
// ray/surface intersection and the reflection/refraction laws.
//
// All lengths are millimeters. Everything here is immutable after
// construction and safe to share across threads.

#ifndef TFOLD_GEOMETRY_HPP
#define TFOLD_GEOMETRY_HPP

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace tfold {

/// Parameter or argument outside the admissible domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Geometry that cannot be processed (zero derivative, runaway subdivision).
class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid construction input. `field` names the offending field when known.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double norm() const { return std::hypot(x, y); }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator-(Point2 o) const { return {x - o.x, y - o.y}; }
  Point2 operator+(Vec2 v) const { return {x + v.x, y + v.y}; }
  Point2 operator-(Vec2 v) const { return {x - v.x, y - v.y}; }
  bool operator==(const Point2&) const = default;
};

inline double distance(Point2 a, Point2 b) { return (a - b).norm(); }

/// Unit direction. The only ways in are `normalized` and `from_angle`, so the
/// norm is always within 1e-12 of one.
class Dir2 {
 public:
  static Dir2 normalized(Vec2 v);
  static Dir2 from_angle(double radians) { return Dir2(std::cos(radians), std::sin(radians)); }

  double x() const { return x_; }
  double y() const { return y_; }
  Vec2 vec() const { return {x_, y_}; }
  double angle() const { return std::atan2(y_, x_); }
  Dir2 operator-() const { return Dir2(-x_, -y_); }
  /// Rotated by +90 degrees.
  Dir2 perp() const { return Dir2(-y_, x_); }
  bool operator==(const Dir2&) const = default;

 private:
  Dir2(double x, double y) : x_(x), y_(y) {}
  double x_;
  double y_;
};

inline double dot(Dir2 a, Dir2 b) { return a.x() * b.x() + a.y() * b.y(); }
inline double dot(Dir2 a, Vec2 b) { return a.x() * b.x + a.y() * b.y; }
inline Point2 operator+(Point2 p, Dir2 d) { return {p.x + d.x(), p.y + d.y()}; }

/// Clamped B-spline curve in the plane.
class BSplineCurve {
 public:
  BSplineCurve(int degree, std::vector<Point2> control_points, std::vector<double> knots);

  /// Clamped knot vector on [0, 1] with uniformly spaced interior knots.
  static BSplineCurve clamped_uniform(int degree, std::vector<Point2> control_points);
  static std::vector<double> clamped_uniform_knots(int degree, std::size_t control_point_count);

  int degree() const { return degree_; }
  const std::vector<Point2>& control_points() const { return control_points_; }
  const std::vector<double>& knots() const { return knots_; }
  double domain_begin() const { return knots_[static_cast<std::size_t>(degree_)]; }
  double domain_end() const { return knots_[control_points_.size()]; }

  /// de Boor evaluation. Throws DomainError outside [domain_begin, domain_end].
  Point2 evaluate(double t) const;
  /// First derivative with respect to the curve parameter.
  Vec2 derivative(double t) const;

  /// Piecewise Bezier form: one control polygon per non-empty knot span.
  struct BezierPiece {
    double t0;
    double t1;
    std::vector<Point2> control;
  };
  const std::vector<BezierPiece>& bezier_pieces() const { return pieces_; }

  /// Copy with the same degree and knots but new control points.
  BSplineCurve with_control_points(std::vector<Point2> control_points) const;

 private:
  std::size_t find_span(double t) const;

  int degree_;
  std::vector<Point2> control_points_;
  std::vector<double> knots_;
  std::vector<Point2> derivative_points_;  // degree-1 hodograph control points
  std::vector<BezierPiece> pieces_;
};

/// Counter-clockwise arc starting at `start_angle` and sweeping `span` radians.
/// As for every geometry, the normal is the tangent rotated +90 degrees, which
/// for a counter-clockwise arc points at the center.
class CircularArc {
 public:
  CircularArc(Point2 center, double radius, double start_angle, double span);

  Point2 center() const { return center_; }
  double radius() const { return radius_; }
  double start_angle() const { return start_angle_; }
  double span() const { return span_; }

  /// Parameter is the swept angle in [0, span].
  Point2 evaluate(double t) const;

 private:
  Point2 center_;
  double radius_;
  double start_angle_;
  double span_;
};

/// Straight segment parameterized on [0, 1]; normal is the direction rotated +90.
class LineSegment {
 public:
  LineSegment(Point2 from, Point2 to);

  Point2 from() const { return from_; }
  Point2 to() const { return to_; }
  Point2 evaluate(double t) const { return from_ + (to_ - from_) * t; }

 private:
  Point2 from_;
  Point2 to_;
};

/// Any surface shape. The side the +90 degree normal points to is called the
/// inside of the surface (the disk interior for an arc).
using Geometry = std::variant<BSplineCurve, CircularArc, LineSegment>;

struct Ray {
  Point2 origin;
  Dir2 direction;
  double medium_index = 1.0;

  Ray(Point2 o, Dir2 d, double n = 1.0);
  Point2 at(double t) const { return origin + direction.vec() * t; }
};

struct SurfaceHit {
  double t_ray;
  double t_surface;
  Point2 point;
};

struct Frame2 {
  Dir2 tangent;
  Dir2 normal;
};

inline constexpr double kMinRayDistance = 1e-9;
inline constexpr double kIntersectionTolerance = 1e-9;
inline constexpr int kMaxSubdivisionDepth = 64;

/// Nearest forward hit with t_ray > min_t, or nothing.
std::optional<SurfaceHit> intersect(const Ray& ray, const BSplineCurve& curve, double min_t = kMinRayDistance);
std::optional<SurfaceHit> intersect(const Ray& ray, const CircularArc& arc, double min_t = kMinRayDistance);
std::optional<SurfaceHit> intersect(const Ray& ray, const LineSegment& segment, double min_t = kMinRayDistance);
std::optional<SurfaceHit> intersect(const Ray& ray, const Geometry& geometry, double min_t = kMinRayDistance);

/// Unit tangent and the tangent rotated +90 degrees.
Frame2 tangent_normal(const BSplineCurve& curve, double t);
Frame2 tangent_normal(const Geometry& geometry, double t);

Point2 evaluate(const Geometry& geometry, double t);
std::pair<double, double> parameter_domain(const Geometry& geometry);

/// Arc length between two parameters (t0 <= t1). Splines use adaptive
/// Gauss-Legendre quadrature per knot span.
double arc_length(const Geometry& geometry, double t0, double t1, double tolerance = 1e-6);
double arc_length(const Geometry& geometry);

/// Dense polyline approximation, used for drawings and envelope checks.
std::vector<Point2> sample(const Geometry& geometry, int count);

Dir2 reflect(Dir2 incoming, Dir2 surface_normal);

struct TotalInternalReflection {};
using RefractionResult = std::variant<Dir2, TotalInternalReflection>;

/// Vector Snell's law. The normal may face either side of the surface.
RefractionResult refract(Dir2 incoming, Dir2 surface_normal, double n_from, double n_to);

}  // namespace tfold

#endif  // TFOLD_GEOMETRY_HPP
