#pragma once

#include <compare>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "relgraph/relations.hpp"

namespace relgraph {

enum class Label : std::uint8_t { positive, negative, ignored };

struct MetricConfig {
  int k = 1000;
  double angle_positive_deg = 10.0;
  double angle_negative_deg = 20.0;
  double distance_positive_m = 1.0;
  double distance_negative_m = 1.2;
};

void validate(const MetricConfig& cfg);

/// Threshold-variant label of an existing relation. Angles <= 10 deg and
/// distances <= 1 m are positive, angles > 20 deg and distances > 1.2 m
/// negative, everything between ignored. `on` is positive.
Label threshold_label(const PredicateClass& pred, std::optional<double> alpha, const MetricConfig& cfg = {});

enum class DistanceBin : std::uint8_t { touching, proximal, adjacent, close, away };

/// 0 -> touching, (0, 0.3] proximal, (0.3, 1] adjacent, (1, 3] close, (3, inf) away.
DistanceBin discretize_distance(double alpha);
std::string_view to_string(DistanceBin bin);
std::string_view to_string(Label label);

/// One evaluated triple. `view` is a camera id, or -1 for scene-level records.
struct TripleKey {
  int view = -1;
  int sbj = 0;
  int obj = 0;
  PredicateClass pred;

  auto operator<=>(const TripleKey&) const = default;
};

struct Prediction {
  double score = 0.0;      // in [0, 1]
  double parameter = 0.0;  // degrees or meters

  bool operator==(const Prediction&) const = default;
};

struct GroundTruth {
  bool exists = false;
  double parameter = 0.0;
  Label label = Label::negative;

  bool operator==(const GroundTruth&) const = default;
};

using PredictionSet = std::map<TripleKey, Prediction>;
using GroundTruthSet = std::map<TripleKey, GroundTruth>;

void validate(const PredictionSet& predictions);

enum class LabelMode { parametric, threshold };

/// Closed-world ground truth of an extracted graph: for every view (every
/// camera, or -1 when the scene has none) and every ordered pair, one entry
/// per applicable predicate. Camera-dependent entries belong to their own
/// view only. Absent relations are negatives.
GroundTruthSet ground_truth_from_graph(const SceneGraph& graph, LabelMode mode, const MetricConfig& cfg = {});

/// Scores every ground-truth entry with its own existence (1 or 0) and parameter.
PredictionSet perfect_predictions(const GroundTruthSet& gt);

struct ScoredLabel {
  double score = 0.0;
  bool positive = false;
};

/// All-points interpolated average precision. Equal scores form one
/// operating point. `missed_positives` counts positives that never appear
/// in the ranking. nullopt when there is no positive at all.
std::optional<double> average_precision(std::vector<ScoredLabel> ranking, std::size_t missed_positives = 0);

struct ApReport {
  std::map<PredicateClass, double> ap;
  /// Unweighted mean over predicates with at least one positive.
  double mean = 0.0;
  std::vector<PredicateClass> skipped;
};

/// Per predicate AP over all views. Ignored entries are excluded;
/// predictions without ground truth are negatives (closed world).
ApReport average_precision(const PredictionSet& predictions, const GroundTruthSet& gt);

/// Per view: rank the non-ignored predictions by score, keep the top k,
/// compute recall of each predicate with positives in the view, average
/// over predicates, then over views.
double ng_mean_recall_at_k(const PredictionSet& predictions, const GroundTruthSet& gt, int k = 1000);

struct MaeReport {
  std::map<PredicateClass, double> mae;
  std::map<PredicateClass, std::size_t> count;
  /// Existing parametric relations without any prediction.
  std::size_t missing = 0;
};

/// Mean |p - p_hat| over existing relations, whatever their predicted score.
MaeReport parameter_mae(const PredictionSet& predictions, const GroundTruthSet& gt);

/// Mean over active flags of (cos p - p_hat)^2, p in radians.
double loss_angle(std::span<const int> f, std::span<const double> p, std::span<const double> p_hat);
/// Mean over active flags of smoothL1(p - p_hat) / (p + 1).
double loss_distance(std::span<const int> f, std::span<const double> p, std::span<const double> p_hat);
double smooth_l1(double x);

struct AggregateResult {
  PredictionSet predictions;  // view = -1
  std::size_t omitted = 0;    // triples without an eligible view
};

/// Median of scores and parameters over the views in which both instances
/// are visible, for camera-independent predicates. Even counts take the
/// lower median.
AggregateResult multiview_aggregate(const PredictionSet& per_view, const std::map<int, std::vector<int>>& visibility);

/// Lower median; throws on empty input.
double lower_median(std::vector<double> values);

struct EvalReport {
  LabelMode mode = LabelMode::parametric;
  int k = 1000;
  ApReport ap;
  double ng_mean_recall = 0.0;
  MaeReport mae;
  std::size_t predictions = 0;
  std::size_t ground_truth = 0;
};

EvalReport evaluate(const PredictionSet& predictions, const GroundTruthSet& gt, LabelMode mode,
                    const MetricConfig& cfg = {});

}  // namespace relgraph
