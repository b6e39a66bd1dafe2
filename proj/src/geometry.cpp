#include "tfold/geometry.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numbers>

namespace tfold {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Point2 lerp(Point2 a, Point2 b, double u) { return {a.x + (b.x - a.x) * u, a.y + (b.y - a.y) * u}; }

// de Boor's algorithm on span k (knots[k] <= t < knots[k+1]).
Point2 de_boor(int degree, std::span<const double> knots, std::span<const Point2> points, std::size_t k, double t) {
  const auto p = static_cast<std::size_t>(degree);
  std::array<Point2, 16> local{};
  std::vector<Point2> heap;
  Point2* d = local.data();
  if (p + 1 > local.size()) {
    heap.resize(p + 1);
    d = heap.data();
  }
  for (std::size_t j = 0; j <= p; ++j) d[j] = points[j + k - p];
  for (std::size_t r = 1; r <= p; ++r) {
    for (std::size_t j = p; j >= r; --j) {
      const double left = knots[j + k - p];
      const double right = knots[j + 1 + k - r];
      const double denom = right - left;
      const double alpha = denom > 0.0 ? (t - left) / denom : 0.0;
      d[j] = lerp(d[j - 1], d[j], alpha);
    }
  }
  return d[p];
}

// Boehm single knot insertion.
void insert_knot(int degree, std::vector<double>& knots, std::vector<Point2>& points, double u) {
  const auto p = static_cast<std::size_t>(degree);
  const auto it = std::upper_bound(knots.begin(), knots.end(), u);
  const auto k = static_cast<std::size_t>(std::distance(knots.begin(), it)) - 1;
  std::vector<Point2> out(points.size() + 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i + p <= k) {
      out[i] = points[i];
    } else if (i <= k) {
      const double a = (u - knots[i]) / (knots[i + p] - knots[i]);
      out[i] = lerp(points[i - 1], points[i], a);
    } else {
      out[i] = points[i - 1];
    }
  }
  knots.insert(knots.begin() + static_cast<std::ptrdiff_t>(k) + 1, u);
  points = std::move(out);
}

Point2 de_casteljau(std::span<const Point2> control, double u) {
  std::array<Point2, 16> local{};
  std::vector<Point2> heap;
  Point2* b = local.data();
  if (control.size() > local.size()) {
    heap.resize(control.size());
    b = heap.data();
  }
  std::copy(control.begin(), control.end(), b);
  for (std::size_t r = 1; r < control.size(); ++r)
    for (std::size_t j = 0; j + r < control.size(); ++j) b[j] = lerp(b[j], b[j + 1], u);
  return b[0];
}

// Splits a Bezier polygon at u = 1/2.
void split_half(std::span<const Point2> control, std::vector<Point2>& left, std::vector<Point2>& right) {
  const std::size_t n = control.size();
  std::vector<Point2> work(control.begin(), control.end());
  left.resize(n);
  right.resize(n);
  left[0] = work[0];
  right[n - 1] = work[n - 1];
  for (std::size_t r = 1; r < n; ++r) {
    for (std::size_t j = 0; j + r < n; ++j) work[j] = lerp(work[j], work[j + 1], 0.5);
    left[r] = work[0];
    right[n - 1 - r] = work[n - 1 - r];
  }
}

struct SplineSearch {
  const Ray& ray;
  double min_t;
  std::optional<SurfaceHit> best;

  double signed_offset(Point2 p) const { return cross(ray.direction.vec(), p - ray.origin); }
  double along(Point2 p) const { return dot(ray.direction, p - ray.origin); }

  void consider(Point2 p, double t_surface) {
    const double t = along(p);
    if (t <= min_t) return;
    if (!best || t < best->t_ray) best = SurfaceHit{t, t_surface, p};
  }

  // Unique sign change on [0, 1]: safeguarded Newton on the offset function.
  void refine(std::span<const Point2> control, double t0, double t1) {
    const double n = static_cast<double>(control.size() - 1);
    auto offset = [&](double u) { return signed_offset(de_casteljau(control, u)); };
    double lo = 0.0;
    double hi = 1.0;
    double f_lo = offset(lo);
    double u = 0.5;
    std::vector<Point2> hodo(control.size() - 1);
    for (std::size_t i = 0; i + 1 < control.size(); ++i) hodo[i] = Point2{0, 0} + (control[i + 1] - control[i]) * n;
    for (int iter = 0; iter < 200; ++iter) {
      const double f = offset(u);
      if (std::abs(f) < kIntersectionTolerance * 1e-3 || hi - lo < 1e-16) break;
      if ((f < 0) == (f_lo < 0)) {
        lo = u;
        f_lo = f;
      } else {
        hi = u;
      }
      const Point2 dp = hodo.empty() ? Point2{} : de_casteljau(hodo, u);
      const double df = cross(ray.direction.vec(), Vec2{dp.x, dp.y});
      double next = df != 0.0 ? u - f / df : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      u = next;
    }
    consider(de_casteljau(control, u), t0 + (t1 - t0) * u);
  }

  void search(std::span<const Point2> control, double t0, double t1, int depth) {
    double f_max = 0.0;
    int positives = 0;
    int negatives = 0;
    double g_min = std::numeric_limits<double>::infinity();
    double g_max = -std::numeric_limits<double>::infinity();
    for (const Point2& q : control) {
      const double f = signed_offset(q);
      const double g = along(q);
      f_max = std::max(f_max, std::abs(f));
      positives += f > 0.0;
      negatives += f < 0.0;
      g_min = std::min(g_min, g);
      g_max = std::max(g_max, g);
    }
    const int count = static_cast<int>(control.size());
    if (positives == count || negatives == count) return;
    if (g_max <= min_t) return;
    if (best && g_min >= best->t_ray) return;

    if (f_max <= kIntersectionTolerance) {
      // The whole piece lies on the ray line within tolerance.
      consider(de_casteljau(control, 0.5), 0.5 * (t0 + t1));
      return;
    }

    const double f_first = signed_offset(control.front());
    const double f_last = signed_offset(control.back());
    if (f_first == 0.0) consider(control.front(), t0);
    if (f_last == 0.0) consider(control.back(), t1);

    int changes = 0;
    int previous = 0;
    for (const Point2& q : control) {
      const double f = signed_offset(q);
      const int s = (f > 0.0) - (f < 0.0);
      if (s == 0) continue;
      if (previous != 0 && s != previous) ++changes;
      previous = s;
    }
    if (changes == 0) return;
    if (changes == 1 && f_first * f_last < 0.0) {
      refine(control, t0, t1);
      return;
    }
    if (depth >= kMaxSubdivisionDepth)
      throw DegeneracyError("ray/spline intersection exceeded the subdivision depth cap");
    std::vector<Point2> left;
    std::vector<Point2> right;
    split_half(control, left, right);
    const double tm = 0.5 * (t0 + t1);
    search(left, t0, tm, depth + 1);
    search(right, tm, t1, depth + 1);
  }
};

// 7-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 7> kGaussNodes = {0.0,
                                               0.4058451513773971669066064,
                                               -0.4058451513773971669066064,
                                               0.7415311855993944398638648,
                                               -0.7415311855993944398638648,
                                               0.9491079123427585245261897,
                                               -0.9491079123427585245261897};
constexpr std::array<double, 7> kGaussWeights = {0.4179591836734693877551020, 0.3818300505051189449503698,
                                                 0.3818300505051189449503698, 0.2797053914892766679014678,
                                                 0.2797053914892766679014678, 0.1294849661688696932706114,
                                                 0.1294849661688696932706114};

template <class F>
double gauss7(const F& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t i = 0; i < kGaussNodes.size(); ++i) sum += kGaussWeights[i] * f(mid + half * kGaussNodes[i]);
  return sum * half;
}

template <class F>
double adaptive_gauss(const F& f, double a, double b, double whole, double tolerance, int depth) {
  const double mid = 0.5 * (a + b);
  const double left = gauss7(f, a, mid);
  const double right = gauss7(f, mid, b);
  if (depth >= 40 || std::abs(left + right - whole) <= tolerance) return left + right;
  return adaptive_gauss(f, a, mid, left, 0.5 * tolerance, depth + 1) +
         adaptive_gauss(f, mid, b, right, 0.5 * tolerance, depth + 1);
}

}  // namespace

Dir2 Dir2::normalized(Vec2 v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw DegeneracyError("cannot normalize a zero or non-finite vector");
  return Dir2(v.x / n, v.y / n);
}

// ---------------------------------------------------------------------------
// BSplineCurve

BSplineCurve::BSplineCurve(int degree, std::vector<Point2> control_points, std::vector<double> knots)
    : degree_(degree), control_points_(std::move(control_points)), knots_(std::move(knots)) {
  if (degree_ < 1) throw ValidationError("degree", "must be at least 1");
  const auto p = static_cast<std::size_t>(degree_);
  const std::size_t n = control_points_.size();
  if (n < p + 1) throw ValidationError("control_points", "need at least degree+1 control points");
  if (knots_.size() != n + p + 1) throw ValidationError("knots", "length must be control points + degree + 1");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i])) throw ValidationError("knots", "must be finite");
    if (i > 0 && knots_[i] < knots_[i - 1]) throw ValidationError("knots", "must be non-decreasing");
  }
  for (std::size_t i = 1; i <= p; ++i) {
    if (knots_[i] != knots_[0] || knots_[knots_.size() - 1 - i] != knots_.back())
      throw ValidationError("knots", "must be clamped (end knots repeated degree+1 times)");
  }
  if (!(knots_.back() > knots_.front())) throw ValidationError("knots", "domain must have positive length");
  for (const Point2& q : control_points_)
    if (!std::isfinite(q.x) || !std::isfinite(q.y)) throw ValidationError("control_points", "must be finite");

  derivative_points_.resize(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double denom = knots_[i + p + 1] - knots_[i + 1];
    const Vec2 d = denom > 0.0 ? (control_points_[i + 1] - control_points_[i]) * (static_cast<double>(p) / denom)
                               : Vec2{};
    derivative_points_[i] = Point2{d.x, d.y};
  }

  std::vector<double> refined_knots = knots_;
  std::vector<Point2> refined_points = control_points_;
  std::vector<double> breaks;
  for (std::size_t i = p; i < n; ++i)
    if (knots_[i + 1] > knots_[i]) breaks.push_back(knots_[i]);
  breaks.push_back(domain_end());
  for (std::size_t b = 1; b + 1 < breaks.size(); ++b) {
    const double u = breaks[b];
    const auto multiplicity = static_cast<std::size_t>(std::count(refined_knots.begin(), refined_knots.end(), u));
    for (std::size_t m = multiplicity; m < p; ++m) insert_knot(degree_, refined_knots, refined_points, u);
  }
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    BezierPiece piece{breaks[s], breaks[s + 1], {}};
    piece.control.assign(refined_points.begin() + static_cast<std::ptrdiff_t>(s * p),
                         refined_points.begin() + static_cast<std::ptrdiff_t>(s * p + p + 1));
    pieces_.push_back(std::move(piece));
  }
}

std::vector<double> BSplineCurve::clamped_uniform_knots(int degree, std::size_t control_point_count) {
  if (degree < 1) throw ValidationError("degree", "must be at least 1");
  const auto p = static_cast<std::size_t>(degree);
  if (control_point_count < p + 1) throw ValidationError("control_points", "need at least degree+1 control points");
  const std::size_t spans = control_point_count - p;
  std::vector<double> knots;
  knots.reserve(control_point_count + p + 1);
  for (std::size_t i = 0; i < p; ++i) knots.push_back(0.0);
  for (std::size_t i = 0; i <= spans; ++i) knots.push_back(static_cast<double>(i) / static_cast<double>(spans));
  for (std::size_t i = 0; i < p; ++i) knots.push_back(1.0);
  return knots;
}

BSplineCurve BSplineCurve::clamped_uniform(int degree, std::vector<Point2> control_points) {
  auto knots = clamped_uniform_knots(degree, control_points.size());
  return BSplineCurve(degree, std::move(control_points), std::move(knots));
}

BSplineCurve BSplineCurve::with_control_points(std::vector<Point2> control_points) const {
  return BSplineCurve(degree_, std::move(control_points), knots_);
}

std::size_t BSplineCurve::find_span(double t) const {
  if (!(t >= domain_begin() && t <= domain_end()))
    throw DomainError("spline parameter " + std::to_string(t) + " outside the curve domain");
  const std::size_t n = control_points_.size();
  if (t >= domain_end()) {
    std::size_t k = n - 1;
    while (knots_[k] >= knots_[k + 1]) --k;
    return k;
  }
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  return static_cast<std::size_t>(std::distance(knots_.begin(), it)) - 1;
}

Point2 BSplineCurve::evaluate(double t) const {
  return de_boor(degree_, knots_, control_points_, find_span(t), t);
}

Vec2 BSplineCurve::derivative(double t) const {
  const std::size_t k = find_span(t);
  // The hodograph uses the knot vector with its first and last knot removed.
  const std::span<const double> inner(knots_.data() + 1, knots_.size() - 2);
  const Point2 d = de_boor(degree_ - 1, inner, derivative_points_, k - 1, t);
  return {d.x, d.y};
}

// ---------------------------------------------------------------------------
// Arc, segment, ray

CircularArc::CircularArc(Point2 center, double radius, double start_angle, double span)
    : center_(center), radius_(radius), start_angle_(start_angle), span_(span) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ValidationError("radius", "must be positive");
  if (!(span > 0.0) || span > kTwoPi + 1e-12) throw ValidationError("span", "must be in (0, 2*pi]");
}

Point2 CircularArc::evaluate(double t) const {
  const double a = start_angle_ + t;
  return {center_.x + radius_ * std::cos(a), center_.y + radius_ * std::sin(a)};
}

LineSegment::LineSegment(Point2 from, Point2 to) : from_(from), to_(to) {
  if (!((to - from).norm() > 0.0)) throw ValidationError("segment", "endpoints must differ");
}

Ray::Ray(Point2 o, Dir2 d, double n) : origin(o), direction(d), medium_index(n) {
  if (!(n >= 1.0)) throw ValidationError("medium_index", "must be at least 1");
}

// ---------------------------------------------------------------------------
// Intersection

std::optional<SurfaceHit> intersect(const Ray& ray, const BSplineCurve& curve, double min_t) {
  SplineSearch search{ray, min_t, std::nullopt};
  for (const auto& piece : curve.bezier_pieces()) search.search(piece.control, piece.t0, piece.t1, 0);
  return search.best;
}

std::optional<SurfaceHit> intersect(const Ray& ray, const CircularArc& arc, double min_t) {
  const Vec2 oc = ray.origin - arc.center();
  const double b = dot(ray.direction, oc);
  const double c = dot(oc, oc) - arc.radius() * arc.radius();
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  // Numerically stable pair of roots.
  const double q = b > 0.0 ? -(b + root) : -(b - root);
  std::array<double, 2> ts = {q, q != 0.0 ? c / q : 0.0};
  if (ts[0] > ts[1]) std::swap(ts[0], ts[1]);
  for (double t : ts) {
    if (!(t > min_t)) continue;
    const Point2 p = ray.at(t);
    double theta = std::atan2(p.y - arc.center().y, p.x - arc.center().x) - arc.start_angle();
    theta = std::fmod(theta, kTwoPi);
    if (theta < 0.0) theta += kTwoPi;
    if (theta > arc.span() + 1e-12 && kTwoPi - theta < 1e-12) theta = 0.0;
    if (theta <= arc.span() + 1e-12) return SurfaceHit{t, std::min(theta, arc.span()), p};
  }
  return std::nullopt;
}

std::optional<SurfaceHit> intersect(const Ray& ray, const LineSegment& segment, double min_t) {
  const Vec2 e = segment.to() - segment.from();
  const double denom = cross(ray.direction.vec(), e);
  if (std::abs(denom) < 1e-300) return std::nullopt;
  const Vec2 w = segment.from() - ray.origin;
  const double t = cross(w, e) / denom;
  const double s = cross(w, ray.direction.vec()) / denom;
  if (!(t > min_t) || s < 0.0 || s > 1.0) return std::nullopt;
  return SurfaceHit{t, s, segment.evaluate(s)};
}

std::optional<SurfaceHit> intersect(const Ray& ray, const Geometry& geometry, double min_t) {
  return std::visit([&](const auto& g) { return intersect(ray, g, min_t); }, geometry);
}

// ---------------------------------------------------------------------------
// Local frames, evaluation, arc length

Frame2 tangent_normal(const BSplineCurve& curve, double t) {
  const Vec2 d = curve.derivative(t);
  if (!(d.norm() > 1e-12)) throw DegeneracyError("spline derivative vanishes at t=" + std::to_string(t));
  const Dir2 tangent = Dir2::normalized(d);
  return {tangent, tangent.perp()};
}

Frame2 tangent_normal(const Geometry& geometry, double t) {
  struct Visitor {
    double t;
    Frame2 operator()(const BSplineCurve& c) const { return tangent_normal(c, t); }
    Frame2 operator()(const CircularArc& a) const {
      const Dir2 tangent = Dir2::from_angle(a.start_angle() + t + 0.5 * std::numbers::pi);
      return {tangent, tangent.perp()};
    }
    Frame2 operator()(const LineSegment& s) const {
      const Dir2 tangent = Dir2::normalized(s.to() - s.from());
      return {tangent, tangent.perp()};
    }
  };
  return std::visit(Visitor{t}, geometry);
}

Point2 evaluate(const Geometry& geometry, double t) {
  return std::visit([t](const auto& g) { return g.evaluate(t); }, geometry);
}

std::pair<double, double> parameter_domain(const Geometry& geometry) {
  struct Visitor {
    std::pair<double, double> operator()(const BSplineCurve& c) const { return {c.domain_begin(), c.domain_end()}; }
    std::pair<double, double> operator()(const CircularArc& a) const { return {0.0, a.span()}; }
    std::pair<double, double> operator()(const LineSegment&) const { return {0.0, 1.0}; }
  };
  return std::visit(Visitor{}, geometry);
}

double arc_length(const Geometry& geometry, double t0, double t1, double tolerance) {
  if (t1 < t0) return -arc_length(geometry, t1, t0, tolerance);
  struct Visitor {
    double t0, t1, tolerance;
    double operator()(const BSplineCurve& c) const {
      auto speed = [&c](double t) { return c.derivative(t).norm(); };
      const auto& knots = c.knots();
      double total = 0.0;
      std::vector<double> cuts{t0};
      for (double k : knots)
        if (k > t0 && k < t1 && k != cuts.back()) cuts.push_back(k);
      cuts.push_back(t1);
      const double per_span = tolerance / static_cast<double>(cuts.size());
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i];
        const double b = cuts[i + 1];
        if (b <= a) continue;
        total += adaptive_gauss(speed, a, b, gauss7(speed, a, b), per_span, 0);
      }
      return total;
    }
    double operator()(const CircularArc& a) const { return a.radius() * (t1 - t0); }
    double operator()(const LineSegment& s) const { return (s.to() - s.from()).norm() * (t1 - t0); }
  };
  return std::visit(Visitor{t0, t1, tolerance}, geometry);
}

double arc_length(const Geometry& geometry) {
  const auto [a, b] = parameter_domain(geometry);
  return arc_length(geometry, a, b);
}

std::vector<Point2> sample(const Geometry& geometry, int count) {
  const auto [a, b] = parameter_domain(geometry);
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 2)));
  const int n = std::max(count, 2);
  for (int i = 0; i < n; ++i) out.push_back(evaluate(geometry, a + (b - a) * i / (n - 1)));
  return out;
}

// ---------------------------------------------------------------------------
// Optics

Dir2 reflect(Dir2 incoming, Dir2 surface_normal) {
  const double k = 2.0 * dot(incoming, surface_normal);
  return Dir2::normalized(incoming.vec() - surface_normal.vec() * k);
}

RefractionResult refract(Dir2 incoming, Dir2 surface_normal, double n_from, double n_to) {
  if (!(n_from >= 1.0) || !(n_to >= 1.0)) throw DomainError("refractive indices must be at least 1");
  Vec2 n = surface_normal.vec();
  double cos_i = -dot(incoming, n);
  if (cos_i < 0.0) {
    n = -n;
    cos_i = -cos_i;
  }
  const double eta = n_from / n_to;
  const double k = 1.0 - eta * eta * (1.0 - cos_i * cos_i);
  if (k < 0.0) return TotalInternalReflection{};
  return Dir2::normalized(incoming.vec() * eta + n * (eta * cos_i - std::sqrt(k)));
}

}  // namespace tfold
