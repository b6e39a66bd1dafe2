#include "tfold/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "tfold/io.hpp"

namespace tfold {

namespace {

constexpr int kSurfaceSamples = 256;
constexpr double kMarginMm = 5.0;

struct Bounds {
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -std::numeric_limits<double>::infinity();
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();

  void add(Point2 p) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
};

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* surface_class(const SurfaceKind& kind) {
  if (std::holds_alternative<Reflective>(kind)) return "surface mirror";
  if (std::holds_alternative<Refractive>(kind)) return "surface refractive";
  return "surface absorber";
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::vector<std::vector<Point2>> ray_polylines(std::span<const TraceResult> traces) {
  std::vector<std::vector<Point2>> out;
  out.reserve(traces.size());
  for (const TraceResult& t : traces) {
    std::vector<Point2> line;
    for (const PathVertex& v : t.path) line.push_back(v.point);
    if (t.terminal == Terminal::Escaped && !t.path.empty())
      line.push_back(t.path.back().point + t.path.back().direction.vec() * kEscapeStubMm);
    out.push_back(std::move(line));
  }
  return out;
}

std::string render_svg(const SensorScene& scene, std::span<const TraceResult> traces) {
  std::vector<std::pair<const OpticalSurface*, std::vector<Point2>>> surfaces;
  Bounds box;
  for (const OpticalSurface& s : scene.surfaces) {
    surfaces.emplace_back(&s, sample(s.geometry, kSurfaceSamples));
    for (Point2 p : surfaces.back().second) box.add(p);
  }
  const std::vector<Point2> skin = sample(scene.skin, kSurfaceSamples);
  for (Point2 p : skin) box.add(p);
  box.add(scene.camera.pinhole);
  const auto rays = ray_polylines(traces);
  for (const auto& line : rays)
    for (Point2 p : line) box.add(p);
  box.xmin -= kMarginMm;
  box.ymin -= kMarginMm;
  box.xmax += kMarginMm;
  box.ymax += kMarginMm;

  auto px = [&](Point2 p) { return fixed3(kSvgScale * (p.x - box.xmin)) + "," + fixed3(kSvgScale * (box.ymax - p.y)); };
  auto points = [&](const std::vector<Point2>& line) {
    std::string s;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i) s += ' ';
      s += px(line[i]);
    }
    return s;
  };

  const std::string w = fixed3(kSvgScale * (box.xmax - box.xmin));
  const std::string h = fixed3(kSvgScale * (box.ymax - box.ymin));
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + w + "\" height=\"" + h + "\" viewBox=\"0 0 " + w +
         " " + h + "\" data-units-per-mm=\"4\">\n";
  out += "<desc>scale: 4 drawing units per mm; origin (" + fixed3(box.xmin) + ", " + fixed3(box.ymax) +
         ") mm at the top-left corner; scene y points up</desc>\n";
  out += "<style>.ray{stroke:#9a9a9a;stroke-width:0.25;fill:none}.skin-hit{stroke:#d62728}"
         ".surface{stroke:#1f3b73;stroke-width:1.2;fill:none}.refractive{stroke:#2ca02c}"
         ".skin{stroke:#000;stroke-width:1.5;fill:none}</style>\n";
  out += "<g id=\"rays\">\n";
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const bool hit = traces[i].terminal == Terminal::SkinHit;
    out += "<polyline class=\"" + std::string(hit ? "ray skin-hit" : "ray") + "\" data-pixel=\"" +
           std::to_string(traces[i].pixel_index) + "\" points=\"" + points(rays[i]) + "\"/>\n";
  }
  out += "</g>\n<g id=\"surfaces\">\n";
  for (const auto& [s, line] : surfaces)
    out += "<polyline class=\"" + std::string(surface_class(s->kind)) + "\" data-name=\"" + xml_escape(s->name) +
           "\" points=\"" + points(line) + "\"/>\n";
  out += "<polyline class=\"skin\" points=\"" + points(skin) + "\"/>\n";
  const std::string pin = px(scene.camera.pinhole);
  const auto comma = pin.find(',');
  out += "<circle class=\"camera\" cx=\"" + pin.substr(0, comma) + "\" cy=\"" + pin.substr(comma + 1) +
         "\" r=\"2\" fill=\"#000\"/>\n";
  out += "</g>\n</svg>\n";
  return out;
}

std::string metrics_table(const DesignMetrics& metrics) {
  std::map<int, double> resolution;
  for (const ProfilePoint& p : metrics.resolution_profile) resolution[p.pixel_index] = p.value;
  std::string out = "pixel_index\tarc_position_mm\timaging_angle_deg\tpx_per_mm\n";
  for (const ProfilePoint& p : metrics.imaging_angle_profile) {
    const auto it = resolution.find(p.pixel_index);
    out += std::to_string(p.pixel_index) + "\t" + format_number(p.arc_position_mm) + "\t" + format_number(p.value) +
           "\t" + format_number(it == resolution.end() ? std::nan("") : it->second) + "\n";
  }
  return out;
}

nlohmann::ordered_json summary_record(const DesignMetrics& metrics, std::span<const TraceResult> traces) {
  nlohmann::ordered_json terminals = nlohmann::ordered_json::object();
  for (Terminal t : {Terminal::SkinHit, Terminal::Escaped, Terminal::Absorbed, Terminal::TotalInternalReflection,
                     Terminal::MaxBounces})
    terminals[to_string(t)] = std::count_if(traces.begin(), traces.end(), [t](const TraceResult& r) { return r.terminal == t; });
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["pixel_count"] = metrics.pixel_count;
  j["skin_hits"] = metrics.skin_hits;
  j["coverage"] = metrics.coverage;
  j["min_imaging_angle_deg"] = metrics.min_imaging_angle;
  j["skin_length_mm"] = metrics.skin_length_mm;
  j["bottom_px_per_mm"] = metrics.bottom_px_per_mm;
  j["tip_px_per_mm"] = metrics.tip_px_per_mm;
  j["resolution_ratio"] = metrics.tip_px_per_mm > 0.0 ? metrics.bottom_px_per_mm / metrics.tip_px_per_mm : 0.0;
  j["terminals"] = terminals;
  return j;
}

TraceArtifacts trace_artifacts(const SensorScene& scene) {
  TraceArtifacts a;
  a.traces = trace_all(scene);
  a.metrics = compute_metrics(scene, a.traces);
  a.svg = render_svg(scene, a.traces);
  a.metrics_tsv = metrics_table(a.metrics);
  a.summary_json = summary_record(a.metrics, a.traces).dump(2) + "\n";
  return a;
}

void write_trace_artifacts(const std::string& prefix, const TraceArtifacts& artifacts) {
  write_files_atomic({{prefix + ".svg", artifacts.svg},
                      {prefix + "_metrics.tsv", artifacts.metrics_tsv},
                      {prefix + "_summary.json", artifacts.summary_json}});
}

std::string history_table(std::span<const HistoryEntry> history) {
  std::string out = "evaluation\tscore\tbest_score\tcoverage\tmin_angle_deg\n";
  for (const HistoryEntry& h : history)
    out += std::to_string(h.evaluation) + "\t" + format_number(h.score) + "\t" + format_number(h.best_score) + "\t" +
           format_number(h.coverage) + "\t" + format_number(h.min_angle) + "\n";
  return out;
}

std::string prediction_table(std::span<const RegressorSample> samples, const RegressorEvaluation& evaluation) {
  std::string out = "index\tbending_true\tbending_pred\ttwisting_true\ttwisting_pred\n";
  for (std::size_t i = 0; i < samples.size() && i < evaluation.predictions.size(); ++i)
    out += std::to_string(i) + "\t" + format_number(samples[i].target.bending) + "\t" +
           format_number(evaluation.predictions[i].bending) + "\t" + format_number(samples[i].target.twisting) + "\t" +
           format_number(evaluation.predictions[i].twisting) + "\n";
  return out;
}

std::string loss_table(std::span<const double> losses) {
  std::string out = "epoch\tloss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) out += std::to_string(i + 1) + "\t" + format_number(losses[i]) + "\n";
  return out;
}

}  // namespace tfold
