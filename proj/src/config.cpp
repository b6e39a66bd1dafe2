#include "tfold/config.hpp"

#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

namespace tfold {

namespace {

using Json = nlohmann::ordered_json;

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Walks a JSON object, tracking the pointer path and the keys consumed so
// leftovers can be reported as unknown.
class Reader {
 public:
  Reader(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ValidationError(path_.empty() ? "/" : path_, "expected an object");
  }

  std::string child_path(const std::string& key) const { return path_ + "/" + key; }
  bool has(const std::string& key) const { return node_.contains(key); }

  const Json& get(const std::string& key) {
    seen_.insert(key);
    if (!node_.contains(key)) throw ValidationError(child_path(key), "missing required field");
    return node_.at(key);
  }

  double number(const std::string& key) {
    const Json& v = get(key);
    if (!v.is_number()) throw ValidationError(child_path(key), "expected a number");
    return v.get<double>();
  }
  double number_or(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  int integer(const std::string& key) {
    const Json& v = get(key);
    if (!v.is_number_integer()) throw ValidationError(child_path(key), "expected an integer");
    return v.get<int>();
  }
  int integer_or(const std::string& key, int fallback) { return has(key) ? integer(key) : fallback; }

  std::string string(const std::string& key) {
    const Json& v = get(key);
    if (!v.is_string()) throw ValidationError(child_path(key), "expected a string");
    return v.get<std::string>();
  }

  Point2 point(const std::string& key) { return read_point(get(key), child_path(key)); }

  static Point2 read_point(const Json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw ValidationError(path, "expected [x, y]");
    return {v[0].get<double>(), v[1].get<double>()};
  }

  void finish() const {
    for (const auto& item : node_.items())
      if (!seen_.count(item.key())) throw ValidationError(child_path(item.key()), "unknown key");
  }

 private:
  const Json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ValidationError(path, what);
}

GeometrySpec read_geometry(const Json& node, const std::string& path, bool is_skin) {
  Reader r(node, path);
  const std::string type = r.string("type");
  GeometrySpec out;
  if (type == "bspline") {
    SplineSpec s;
    s.degree = r.integer_or("degree", 3);
    require(s.degree >= 1, r.child_path("degree"), "must be at least 1");
    const Json& cps = r.get("control_points");
    require(cps.is_array(), r.child_path("control_points"), "expected an array of [x, y]");
    for (std::size_t i = 0; i < cps.size(); ++i)
      s.control_points.push_back(Reader::read_point(cps[i], r.child_path("control_points") + "/" + std::to_string(i)));
    require(s.control_points.size() >= static_cast<std::size_t>(s.degree) + 1, r.child_path("control_points"),
            "need at least degree+1 control points");
    if (r.has("knots")) {
      const Json& k = r.get("knots");
      require(k.is_array(), r.child_path("knots"), "expected an array of numbers");
      for (const auto& v : k) {
        require(v.is_number(), r.child_path("knots"), "expected an array of numbers");
        s.knots.push_back(v.get<double>());
      }
    } else {
      s.knots = BSplineCurve::clamped_uniform_knots(s.degree, s.control_points.size());
    }
    if (r.has("fixed_points")) {
      const Json& f = r.get("fixed_points");
      require(f.is_array(), r.child_path("fixed_points"), "expected an array of indices");
      for (const auto& v : f) {
        require(v.is_number_integer(), r.child_path("fixed_points"), "expected an array of indices");
        const int i = v.get<int>();
        require(i >= 0 && i < static_cast<int>(s.control_points.size()), r.child_path("fixed_points"),
                "index out of range");
        s.fixed_points.push_back(i);
      }
    } else if (is_skin) {
      s.fixed_points = {0, static_cast<int>(s.control_points.size()) - 1};
    }
    out = std::move(s);
  } else if (type == "arc") {
    ArcSpec a;
    a.center = r.point("center");
    a.radius = r.number("radius");
    require(a.radius > 0.0, r.child_path("radius"), "must be positive");
    a.start_deg = r.number("start_deg");
    a.span_deg = r.number("span_deg");
    require(a.span_deg > 0.0 && a.span_deg <= 360.0, r.child_path("span_deg"), "must be in (0, 360]");
    out = a;
  } else if (type == "segment") {
    SegmentSpec s;
    s.from = r.point("from");
    s.to = r.point("to");
    require(!(s.from == s.to), r.child_path("to"), "segment endpoints must differ");
    out = s;
  } else {
    throw ValidationError(r.child_path("type"), "expected \"bspline\", \"arc\" or \"segment\"");
  }
  r.finish();
  // Surface the geometry's own invariants (knot clamping etc.) with a path.
  try {
    build_geometry(out);
  } catch (const ValidationError& e) {
    throw ValidationError(path + "/" + e.field(), e.what());
  }
  return out;
}

Json point_json(Point2 p) { return Json::array({p.x, p.y}); }

Json geometry_json(const GeometrySpec& spec) {
  Json j = Json::object();
  if (const auto* s = std::get_if<SplineSpec>(&spec)) {
    j["type"] = "bspline";
    j["degree"] = s->degree;
    Json cps = Json::array();
    for (const auto& p : s->control_points) cps.push_back(point_json(p));
    j["control_points"] = std::move(cps);
    j["knots"] = s->knots;
    j["fixed_points"] = s->fixed_points;
  } else if (const auto* a = std::get_if<ArcSpec>(&spec)) {
    j["type"] = "arc";
    j["center"] = point_json(a->center);
    j["radius"] = a->radius;
    j["start_deg"] = a->start_deg;
    j["span_deg"] = a->span_deg;
  } else {
    const auto& g = std::get<SegmentSpec>(spec);
    j["type"] = "segment";
    j["from"] = point_json(g.from);
    j["to"] = point_json(g.to);
  }
  return j;
}

}  // namespace

Geometry build_geometry(const GeometrySpec& spec) {
  struct Visitor {
    Geometry operator()(const SplineSpec& s) const { return BSplineCurve(s.degree, s.control_points, s.knots); }
    Geometry operator()(const ArcSpec& a) const {
      return CircularArc(a.center, a.radius, a.start_deg * kDegToRad, a.span_deg * kDegToRad);
    }
    Geometry operator()(const SegmentSpec& s) const { return LineSegment(s.from, s.to); }
  };
  return std::visit(Visitor{}, spec);
}

SensorScene SceneConfig::to_scene() const {
  SensorScene scene{Camera{pinhole, Dir2::from_angle(boresight_deg * kDegToRad), fov_deg, pixel_count},
                    {},
                    build_geometry(skin),
                    envelope,
                    1.0};
  try {
    scene.camera.validate();
  } catch (const ValidationError& e) {
    throw ValidationError("/camera/" + e.field(), e.what());
  }
  for (const auto& s : surfaces) scene.surfaces.push_back({s.name, build_geometry(s.geometry), s.kind});
  if (gel && gel->dome) {
    const DomeSpec& d = *gel->dome;
    if (!(distance(d.center, pinhole) < d.radius))
      throw ValidationError("/gel/dome/center", "the pinhole must lie inside the dome");
    const double start = boresight_deg * kDegToRad - 0.5 * std::numbers::pi;
    scene.surfaces.push_back({"dome", CircularArc(d.center, d.radius, start, std::numbers::pi),
                              Refractive{scene.camera_medium_index, gel->refractive_index}});
  }
  scene.validate();
  return scene;
}

SceneConfig parse_scene_config(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigSyntaxError(std::string("scene config syntax error: ") + e.what());
  }

  SceneConfig c;
  Reader r(root, "");
  require(r.string("units") == "mm", "/units", "only \"mm\" is supported");

  {
    Reader cam(r.get("camera"), "/camera");
    c.pinhole = cam.point("pinhole");
    c.boresight_deg = cam.number("boresight_deg");
    c.fov_deg = cam.number_or("fov_deg", 120.0);
    require(c.fov_deg > 0.0 && c.fov_deg < 180.0, "/camera/fov_deg", "must be in (0, 180)");
    c.pixel_count = cam.integer_or("pixel_count", 1080);
    require(c.pixel_count >= 2, "/camera/pixel_count", "must be at least 2");
    cam.finish();
  }

  if (r.has("gel") && !r.get("gel").is_null()) {
    Reader g(r.get("gel"), "/gel");
    GelSpec gel;
    gel.refractive_index = g.number_or("refractive_index", 1.41);
    require(gel.refractive_index >= 1.0, "/gel/refractive_index", "must be at least 1");
    if (g.has("dome") && !g.get("dome").is_null()) {
      Reader d(g.get("dome"), "/gel/dome");
      DomeSpec dome;
      dome.center = d.point("center");
      dome.radius = d.number_or("radius", 3.5);
      require(dome.radius > 0.0, "/gel/dome/radius", "must be positive");
      d.finish();
      gel.dome = dome;
    }
    g.finish();
    c.gel = gel;
  }

  const Json& surfaces = r.get("surfaces");
  require(surfaces.is_array(), "/surfaces", "expected an array");
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    const std::string path = "/surfaces/" + std::to_string(i);
    Reader s(surfaces[i], path);
    SurfaceSpec spec;
    spec.name = s.string("name");
    const std::string kind = s.string("kind");
    if (kind == "reflective") {
      spec.kind = Reflective{};
    } else if (kind == "absorbing") {
      spec.kind = Absorbing{};
    } else if (kind == "refractive") {
      Refractive rf{s.number("n_inside"), s.number("n_outside")};
      require(rf.n_inside >= 1.0, path + "/n_inside", "must be at least 1");
      require(rf.n_outside >= 1.0, path + "/n_outside", "must be at least 1");
      spec.kind = rf;
    } else {
      throw ValidationError(path + "/kind", "expected \"reflective\", \"absorbing\" or \"refractive\"");
    }
    spec.geometry = read_geometry(s.get("geometry"), path + "/geometry", false);
    s.finish();
    c.surfaces.push_back(std::move(spec));
  }

  c.skin = read_geometry(r.get("skin"), "/skin", true);

  if (r.has("envelope")) {
    Reader e(r.get("envelope"), "/envelope");
    c.envelope.length = e.number_or("length", 83.5);
    c.envelope.width = e.number_or("width", 22.7);
    c.envelope.thickness = e.number_or("thickness", 18.8);
    require(c.envelope.length > 0.0, "/envelope/length", "must be positive");
    require(c.envelope.width > 0.0, "/envelope/width", "must be positive");
    require(c.envelope.thickness > 0.0, "/envelope/thickness", "must be positive");
    e.finish();
  }
  r.finish();

  c.to_scene();  // full invariant check
  return c;
}

std::string emit_scene_config(const SceneConfig& c) {
  Json root = Json::object();
  root["units"] = "mm";
  Json cam = Json::object();
  cam["pinhole"] = point_json(c.pinhole);
  cam["boresight_deg"] = c.boresight_deg;
  cam["fov_deg"] = c.fov_deg;
  cam["pixel_count"] = c.pixel_count;
  root["camera"] = std::move(cam);
  if (c.gel) {
    Json gel = Json::object();
    gel["refractive_index"] = c.gel->refractive_index;
    if (c.gel->dome) {
      Json dome = Json::object();
      dome["center"] = point_json(c.gel->dome->center);
      dome["radius"] = c.gel->dome->radius;
      gel["dome"] = std::move(dome);
    }
    root["gel"] = std::move(gel);
  }
  Json surfaces = Json::array();
  for (const auto& s : c.surfaces) {
    Json j = Json::object();
    j["name"] = s.name;
    if (std::holds_alternative<Reflective>(s.kind)) {
      j["kind"] = "reflective";
    } else if (std::holds_alternative<Absorbing>(s.kind)) {
      j["kind"] = "absorbing";
    } else {
      const auto& rf = std::get<Refractive>(s.kind);
      j["kind"] = "refractive";
      j["n_inside"] = rf.n_inside;
      j["n_outside"] = rf.n_outside;
    }
    j["geometry"] = geometry_json(s.geometry);
    surfaces.push_back(std::move(j));
  }
  root["surfaces"] = std::move(surfaces);
  root["skin"] = geometry_json(c.skin);
  Json env = Json::object();
  env["length"] = c.envelope.length;
  env["width"] = c.envelope.width;
  env["thickness"] = c.envelope.thickness;
  root["envelope"] = std::move(env);
  return root.dump(2) + "\n";
}

SensorScene parse_scene(const std::string& text) { return parse_scene_config(text).to_scene(); }

SceneConfig load_scene_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read scene config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scene_config(ss.str());
}

}  // namespace tfold
