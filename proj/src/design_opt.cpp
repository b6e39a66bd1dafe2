#include "tfold/design_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>

#include "tfold/metrics.hpp"

namespace tfold {

namespace {

constexpr int kEnvelopeSamples = 256;

struct Sample {
  double score;
  double coverage;
  double min_angle;
};

using Evaluator = std::function<Sample(std::span<const double>)>;

std::vector<SplineSpec*> splines_of(SceneConfig& config) {
  std::vector<SplineSpec*> out;
  for (auto& s : config.surfaces)
    if (auto* spline = std::get_if<SplineSpec>(&s.geometry)) out.push_back(spline);
  if (auto* spline = std::get_if<SplineSpec>(&config.skin)) out.push_back(spline);
  return out;
}

// Simplex search over the free coordinates. Vertices are stored as full
// design vectors so the fixed coordinates ride along untouched.
class Simplex {
 public:
  Simplex(const Evaluator& evaluate, const DesignVector& initial, const NelderMeadOptions& options,
          const HistoryObserver& observer)
      : evaluate_(evaluate), options_(options), observer_(observer), base_(initial) {
    for (std::size_t i = 0; i < initial.size(); ++i)
      if (!initial.fixed[i]) free_.push_back(i);
  }

  OptimizeResult run() {
    const std::size_t n = free_.size();
    if (options_.budget < static_cast<int>(n) + 1)
      throw DomainError("budget " + std::to_string(options_.budget) + " is below dimension + 1 = " +
                        std::to_string(n + 1));

    std::vector<std::vector<double>> start{free_values(base_.values)};
    for (std::size_t i = 0; i < n; ++i) {
      start.push_back(start.front());
      start.back()[i] += options_.initial_step;
    }
    if (!evaluate_vertices(start)) return finish();
    result_.initial_score = -values_.front();

    bool restarted = false;
    while (evaluations_ < options_.budget) {
      order();
      if (converged()) {
        if (restarted || options_.budget - evaluations_ < static_cast<int>(n)) break;
        restarted = true;
        result_.restarted = true;
        if (!restart()) break;
        continue;
      }
      if (!step()) break;
    }
    return finish();
  }

 private:
  std::vector<double> free_values(const std::vector<double>& full) const {
    std::vector<double> out;
    for (std::size_t i : free_) out.push_back(full[i]);
    return out;
  }

  std::vector<double> full_values(const std::vector<double>& x) const {
    std::vector<double> out = base_.values;
    for (std::size_t k = 0; k < free_.size(); ++k) out[free_[k]] = x[k];
    return out;
  }

  void record(const std::vector<double>& x, const Sample& s) {
    ++evaluations_;
    if (!has_best_ || s.score > best_score_) {
      has_best_ = true;
      best_score_ = s.score;
      best_x_ = x;
    }
    HistoryEntry entry{evaluations_, s.score, best_score_, s.coverage, s.min_angle};
    result_.history.push_back(entry);
    if (observer_) observer_(entry);
  }

  // Returns nullopt once the budget is spent.
  std::optional<double> value_of(const std::vector<double>& x) {
    if (evaluations_ >= options_.budget) return std::nullopt;
    const std::vector<double> full = full_values(x);
    const Sample s = evaluate_(full);
    record(x, s);
    return -s.score;
  }

  // Evaluates a batch concurrently, recording in batch order. Batches that
  // would overrun the budget are truncated.
  std::vector<double> value_batch(const std::vector<std::vector<double>>& xs) {
    const int count = std::min(static_cast<int>(xs.size()), options_.budget - evaluations_);
    std::vector<Sample> samples(static_cast<std::size_t>(std::max(count, 0)));
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < count; ++i) {
      try {
        samples[static_cast<std::size_t>(i)] = evaluate_(full_values(xs[static_cast<std::size_t>(i)]));
      } catch (...) {
#pragma omp critical(tfold_nm_failure)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
      record(xs[static_cast<std::size_t>(i)], samples[static_cast<std::size_t>(i)]);
      out.push_back(-samples[static_cast<std::size_t>(i)].score);
    }
    return out;
  }

  bool evaluate_vertices(const std::vector<std::vector<double>>& xs) {
    vertices_.clear();
    values_.clear();
    for (const auto& x : xs) {
      const auto v = value_of(x);
      if (!v) return false;
      vertices_.push_back(x);
      values_.push_back(*v);
    }
    return true;
  }

  void order() {
    std::vector<std::size_t> idx(vertices_.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values_[a] < values_[b]; });
    std::vector<std::vector<double>> v;
    std::vector<double> f;
    for (std::size_t i : idx) {
      v.push_back(vertices_[i]);
      f.push_back(values_[i]);
    }
    vertices_ = std::move(v);
    values_ = std::move(f);
  }

  bool converged() const {
    if (values_.back() - values_.front() > options_.score_tolerance) return false;
    double diameter = 0.0;
    for (const auto& v : vertices_)
      for (std::size_t k = 0; k < v.size(); ++k) diameter = std::max(diameter, std::abs(v[k] - vertices_.front()[k]));
    return diameter <= options_.size_tolerance;
  }

  bool restart() {
    std::mt19937_64 rng(options_.seed);
    std::uniform_real_distribution<double> jitter(0.75, 1.25);
    const std::vector<double> best = vertices_.front();
    const double best_value = values_.front();
    vertices_ = {best};
    values_ = {best_value};
    for (std::size_t i = 0; i < free_.size(); ++i) {
      std::vector<double> x = best;
      x[i] += options_.initial_step * jitter(rng);
      const auto v = value_of(x);
      if (!v) return false;
      vertices_.push_back(std::move(x));
      values_.push_back(*v);
    }
    return true;
  }

  static std::vector<double> blend(const std::vector<double>& a, const std::vector<double>& b, double t) {
    std::vector<double> out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] + t * (b[k] - a[k]);
    return out;
  }

  void replace_worst(std::vector<double> x, double f) {
    vertices_.back() = std::move(x);
    values_.back() = f;
  }

  bool step() {
    const std::size_t n = free_.size();
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) centroid[k] += vertices_[i][k] / static_cast<double>(n);
    const std::vector<double>& worst = vertices_.back();

    std::vector<double> xr = blend(centroid, worst, -1.0);
    const auto fr = value_of(xr);
    if (!fr) return false;

    if (*fr < values_.front()) {
      std::vector<double> xe = blend(centroid, worst, -2.0);
      const auto fe = value_of(xe);
      if (!fe) return false;
      if (*fe < *fr)
        replace_worst(std::move(xe), *fe);
      else
        replace_worst(std::move(xr), *fr);
      return true;
    }
    if (*fr < values_[n - 1]) {
      replace_worst(std::move(xr), *fr);
      return true;
    }

    if (*fr < values_.back()) {
      std::vector<double> xc = blend(centroid, xr, 0.5);
      const auto fc = value_of(xc);
      if (!fc) return false;
      if (*fc <= *fr) {
        replace_worst(std::move(xc), *fc);
        return true;
      }
    } else {
      std::vector<double> xc = blend(centroid, worst, 0.5);
      const auto fc = value_of(xc);
      if (!fc) return false;
      if (*fc < values_.back()) {
        replace_worst(std::move(xc), *fc);
        return true;
      }
    }
    return shrink();
  }

  bool shrink() {
    std::vector<std::vector<double>> moved;
    for (std::size_t i = 1; i < vertices_.size(); ++i) moved.push_back(blend(vertices_.front(), vertices_[i], 0.5));
    const std::vector<double> f = value_batch(moved);
    for (std::size_t i = 0; i < f.size(); ++i) {
      vertices_[i + 1] = std::move(moved[i]);
      values_[i + 1] = f[i];
    }
    return f.size() == moved.size();
  }

  OptimizeResult finish() {
    result_.best = base_;
    if (has_best_) result_.best.values = full_values(best_x_);
    result_.best_score = best_score_;
    return std::move(result_);
  }

  const Evaluator& evaluate_;
  NelderMeadOptions options_;
  const HistoryObserver& observer_;
  DesignVector base_;
  std::vector<std::size_t> free_;

  std::vector<std::vector<double>> vertices_;
  std::vector<double> values_;
  int evaluations_ = 0;
  bool has_best_ = false;
  double best_score_ = -std::numeric_limits<double>::infinity();
  std::vector<double> best_x_;
  OptimizeResult result_;
};

}  // namespace

std::size_t DesignVector::free_count() const {
  return static_cast<std::size_t>(std::count(fixed.begin(), fixed.end(), false));
}

DesignVector design_vector(const SceneConfig& config) {
  SceneConfig copy = config;
  DesignVector out;
  for (const SplineSpec* spline : splines_of(copy)) {
    const std::size_t first = out.values.size();
    for (const Point2& p : spline->control_points) {
      out.values.push_back(p.x);
      out.values.push_back(p.y);
      out.fixed.push_back(false);
      out.fixed.push_back(false);
    }
    for (int i : spline->fixed_points) {
      const std::size_t at = first + 2 * static_cast<std::size_t>(i);
      if (i < 0 || at + 1 >= out.values.size())
        throw DomainError("fixed point index " + std::to_string(i) + " out of range");
      out.fixed[at] = true;
      out.fixed[at + 1] = true;
    }
  }
  return out;
}

SceneConfig apply_design(const SceneConfig& base, const DesignVector& design) {
  SceneConfig out = base;
  std::size_t at = 0;
  for (SplineSpec* spline : splines_of(out)) {
    for (Point2& p : spline->control_points) {
      if (at + 2 > design.values.size()) throw DomainError("design vector is shorter than the scene's control points");
      p = {design.values[at], design.values[at + 1]};
      at += 2;
    }
  }
  if (at != design.values.size()) throw DomainError("design vector is longer than the scene's control points");
  return out;
}

double envelope_violation(const SensorScene& scene, const Envelope& envelope) {
  double x0 = std::numeric_limits<double>::infinity();
  double y0 = x0;
  double x1 = -x0;
  double y1 = -x0;
  auto extend = [&](const Geometry& g) {
    for (const Point2& p : sample(g, kEnvelopeSamples)) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
  };
  for (const auto& s : scene.surfaces) extend(s.geometry);
  extend(scene.skin);
  return std::max(0.0, (x1 - x0) - envelope.length) + std::max(0.0, (y1 - y0) - envelope.thickness);
}

double objective_value(const DesignObjective& objective, double min_angle_deg, double coverage, double violation) {
  const double shortfall = 1.0 - coverage;
  return objective.angle_weight * min_angle_deg - objective.coverage_weight * shortfall * shortfall -
         objective.envelope_weight * violation * violation;
}

DesignEvaluation evaluate_design(const DesignVector& design, const SceneConfig& base, const DesignObjective& objective) {
  DesignEvaluation out;
  try {
    const SensorScene scene = apply_design(base, design).to_scene();
    const std::vector<TraceResult> traces = trace_all(scene);
    const DesignMetrics m = compute_metrics(scene, traces);
    out.coverage = m.coverage;
    out.min_angle = m.min_imaging_angle;
    out.violation = envelope_violation(scene, objective.envelope);
    out.score = objective_value(objective, out.min_angle, out.coverage, out.violation);
    if (!std::isfinite(out.score)) throw DomainError("non-finite score");
  } catch (const std::exception&) {
    out = DesignEvaluation{};
    out.decodable = false;
    out.score = kUndecodablePenalty;
  }
  return out;
}

double score(const DesignVector& design, const SceneConfig& base, const DesignObjective& objective) {
  return evaluate_design(design, base, objective).score;
}

OptimizeResult nelder_mead(const Objective& f, const DesignVector& initial, const NelderMeadOptions& options,
                           const HistoryObserver& observer) {
  const Evaluator evaluate = [&f](std::span<const double> x) { return Sample{f(x), 0.0, 0.0}; };
  return Simplex(evaluate, initial, options, observer).run();
}

OptimizeResult optimize(const DesignVector& initial, const SceneConfig& base, const DesignObjective& objective,
                        int budget, std::uint64_t seed, const HistoryObserver& observer) {
  NelderMeadOptions options;
  options.budget = budget;
  options.seed = seed;
  options.initial_step = 0.05 * std::hypot(objective.envelope.length, objective.envelope.thickness);
  const Evaluator evaluate = [&](std::span<const double> x) {
    DesignVector d = initial;
    d.values.assign(x.begin(), x.end());
    const DesignEvaluation e = evaluate_design(d, base, objective);
    return Sample{e.score, e.coverage, e.min_angle};
  };
  return Simplex(evaluate, initial, options, observer).run();
}

}  // namespace tfold
