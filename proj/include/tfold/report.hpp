// Artifacts shared by the CLI and the HTTP service: the SVG drawing, the
// metrics table and the summary record of a trace, plus the optimizer history
// table and the regressor prediction table.

#ifndef TFOLD_REPORT_HPP
#define TFOLD_REPORT_HPP

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tfold/design_opt.hpp"
#include "tfold/metrics.hpp"
#include "tfold/regressor.hpp"
#include "tfold/scene.hpp"

namespace tfold {

inline constexpr const char* kVersion = "0.1.0";

/// Drawing units per millimetre in the SVG output.
inline constexpr double kSvgScale = 4.0;

/// Escaped rays are drawn this far past their last vertex.
inline constexpr double kEscapeStubMm = 10.0;

/// Ray polylines in scene coordinates, one per pixel.
std::vector<std::vector<Point2>> ray_polylines(std::span<const TraceResult> traces);

/// Surfaces, skin, camera and every pixel ray; y points up in the scene and
/// down in the drawing. Skin-hit rays carry class "ray skin-hit", the rest
/// class "ray".
std::string render_svg(const SensorScene& scene, std::span<const TraceResult> traces);

/// Tab-separated, one row per skin hit in pixel order: pixel_index,
/// arc_position_mm, imaging_angle_deg, px_per_mm ("nan" where no same-route
/// neighbor exists). Numbers use 17 significant digits.
std::string metrics_table(const DesignMetrics& metrics);

nlohmann::ordered_json summary_record(const DesignMetrics& metrics, std::span<const TraceResult> traces);

struct TraceArtifacts {
  std::string svg;
  std::string metrics_tsv;
  std::string summary_json;
  DesignMetrics metrics;
  std::vector<TraceResult> traces;
};

TraceArtifacts trace_artifacts(const SensorScene& scene);

/// <prefix>.svg, <prefix>_metrics.tsv, <prefix>_summary.json, written
/// all-or-nothing.
void write_trace_artifacts(const std::string& prefix, const TraceArtifacts& artifacts);

/// evaluation, score, best_score, coverage, min_angle_deg.
std::string history_table(std::span<const HistoryEntry> history);

/// index, bending_true, bending_pred, twisting_true, twisting_pred.
std::string prediction_table(std::span<const RegressorSample> samples, const RegressorEvaluation& evaluation);

/// One loss per line, prefixed by the 1-based epoch.
std::string loss_table(std::span<const double> losses);

std::string format_number(double value);

}  // namespace tfold

#endif  // TFOLD_REPORT_HPP
