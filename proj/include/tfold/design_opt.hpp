// Derivative-free shape optimization of the spline control points of a scene
// (curved mirror and skin) under the finger envelope.

#ifndef TFOLD_DESIGN_OPT_HPP
#define TFOLD_DESIGN_OPT_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tfold/config.hpp"
#include "tfold/scene.hpp"

namespace tfold {

/// Control-point coordinates of every spline in the config, surfaces in
/// listed order and then the skin, flattened as x0, y0, x1, y1, ...
/// `fixed` marks coordinates the optimizer must not move.
struct DesignVector {
  std::vector<double> values;
  std::vector<bool> fixed;

  std::size_t size() const { return values.size(); }
  std::size_t free_count() const;
};

DesignVector design_vector(const SceneConfig& config);

/// Writes the coordinates back into a copy of `base`. Throws DomainError when
/// the vector does not match the config's spline layout.
SceneConfig apply_design(const SceneConfig& base, const DesignVector& design);

struct DesignObjective {
  double angle_weight = 1.0;
  double coverage_weight = 100.0;
  double envelope_weight = 100.0;
  /// Length bounds the x extent and thickness the y extent of the 2-D section.
  Envelope envelope;
};

/// Positive overrun (mm) of the scene's sampled extent beyond the envelope,
/// summed over the two axes.
double envelope_violation(const SensorScene& scene, const Envelope& envelope);

struct DesignEvaluation {
  double score = 0.0;
  double coverage = 0.0;
  double min_angle = 0.0;
  double violation = 0.0;
  bool decodable = true;
};

inline constexpr double kUndecodablePenalty = -1.0e6;

double objective_value(const DesignObjective& objective, double min_angle_deg, double coverage, double violation);

/// w1 * min_angle - w2 * (1 - coverage)^2 - w3 * violation^2, with the angle
/// in degrees. A design that cannot be built or traced scores
/// kUndecodablePenalty.
DesignEvaluation evaluate_design(const DesignVector& design, const SceneConfig& base, const DesignObjective& objective);
double score(const DesignVector& design, const SceneConfig& base, const DesignObjective& objective);

struct NelderMeadOptions {
  int budget = 2000;
  /// Edge length of the initial simplex along each free coordinate.
  double initial_step = 1.0;
  std::uint64_t seed = 0;
  /// Converged when both the score spread and the simplex diameter fall below these.
  double score_tolerance = 1e-9;
  double size_tolerance = 1e-9;
};

struct HistoryEntry {
  int evaluation = 0;  // 1-based
  double score = 0.0;
  double best_score = 0.0;
  double coverage = 0.0;
  double min_angle = 0.0;
};

struct OptimizeResult {
  DesignVector best;
  double best_score = 0.0;
  double initial_score = 0.0;
  std::vector<HistoryEntry> history;
  bool restarted = false;
};

using Objective = std::function<double(std::span<const double>)>;
/// Called once per evaluation, in evaluation order.
using HistoryObserver = std::function<void(const HistoryEntry&)>;

/// Maximizes `f` over the free coordinates of `initial` with the Nelder-Mead
/// simplex method (reflect 1, expand 2, contract 0.5, shrink 0.5). If the
/// simplex converges before the budget is spent it is rebuilt once around the
/// best point with seeded jitter. Shrink-step evaluations run in parallel, so
/// `f` must be safe to call concurrently. Throws DomainError when the budget
/// is smaller than free dimension + 1.
OptimizeResult nelder_mead(const Objective& f, const DesignVector& initial, const NelderMeadOptions& options,
                           const HistoryObserver& observer = {});

/// nelder_mead over score(), with the initial step set to 5% of the envelope
/// diagonal in the 2-D section.
OptimizeResult optimize(const DesignVector& initial, const SceneConfig& base, const DesignObjective& objective,
                        int budget, std::uint64_t seed, const HistoryObserver& observer = {});

}  // namespace tfold

#endif  // TFOLD_DESIGN_OPT_HPP
