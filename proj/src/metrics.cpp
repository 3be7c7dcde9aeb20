#include "relgraph/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

namespace relgraph {

void validate(const MetricConfig& cfg) {
  if (cfg.k < 1) throw Error("k must be at least 1");
  if (!(cfg.angle_positive_deg <= cfg.angle_negative_deg)) throw Error("angle thresholds out of order");
  if (!(cfg.distance_positive_m <= cfg.distance_negative_m)) throw Error("distance thresholds out of order");
}

Label threshold_label(const PredicateClass& pred, std::optional<double> alpha, const MetricConfig& cfg) {
  if (!pred.parametric()) return Label::positive;
  if (!alpha) throw Error("parametric relation without parameter");
  const double lo = pred.directional() ? cfg.angle_positive_deg : cfg.distance_positive_m;
  const double hi = pred.directional() ? cfg.angle_negative_deg : cfg.distance_negative_m;
  if (*alpha <= lo) return Label::positive;
  if (*alpha > hi) return Label::negative;
  return Label::ignored;
}

DistanceBin discretize_distance(double alpha) {
  if (!(alpha >= 0.0)) throw Error("distance must be non-negative");
  if (alpha == 0.0) return DistanceBin::touching;
  if (alpha <= 0.3) return DistanceBin::proximal;
  if (alpha <= 1.0) return DistanceBin::adjacent;
  if (alpha <= 3.0) return DistanceBin::close;
  return DistanceBin::away;
}

std::string_view to_string(DistanceBin bin) {
  switch (bin) {
    case DistanceBin::touching: return "touching";
    case DistanceBin::proximal: return "proximal";
    case DistanceBin::adjacent: return "adjacent";
    case DistanceBin::close: return "close";
    case DistanceBin::away: return "away";
  }
  return "?";
}

std::string_view to_string(Label label) {
  switch (label) {
    case Label::positive: return "positive";
    case Label::negative: return "negative";
    case Label::ignored: return "ignored";
  }
  return "?";
}

void validate(const PredictionSet& predictions) {
  for (const auto& [key, p] : predictions) {
    if (!(p.score >= 0.0 && p.score <= 1.0)) throw Error("prediction score outside [0, 1]");
    if (!std::isfinite(p.parameter)) throw Error("prediction parameter is not finite");
    if (!key.pred.valid()) throw Error("prediction has an inadmissible predicate");
  }
}

GroundTruthSet ground_truth_from_graph(const SceneGraph& graph, LabelMode mode, const MetricConfig& cfg) {
  validate(cfg);
  std::vector<int> views;
  for (const auto& [cam, visible] : graph.visibility) views.push_back(cam);
  if (views.empty()) views.push_back(-1);

  std::vector<PredicateClass> free_preds;
  for (const PredicateKind k : {PredicateKind::next_to, PredicateKind::touching, PredicateKind::on}) {
    free_preds.push_back(make_predicate(k, Frame::frame_free));
  }
  GroundTruthSet gt;
  for (const int view : views) {
    for (const InstanceInfo& sbj : graph.instances) {
      for (const InstanceInfo& obj : graph.instances) {
        if (sbj.id == obj.id) continue;
        std::vector<PredicateClass> preds = free_preds;
        for (const PredicateKind k : kDirectionalKinds) {
          if (view >= 0) preds.push_back(make_predicate(k, Frame::camera_dependent));
          if (obj.directional_capable) preds.push_back(make_predicate(k, Frame::object_dependent));
        }
        for (const PredicateClass& pred : preds) gt[{view, sbj.id, obj.id, pred}] = GroundTruth{};
      }
    }
  }
  for (const Relation& r : graph.relations) {
    GroundTruth truth;
    truth.exists = true;
    truth.parameter = r.alpha.value_or(0.0);
    truth.label = mode == LabelMode::threshold ? threshold_label(r.pred, r.alpha, cfg) : Label::positive;
    for (const int view : views) {
      if (r.cam && *r.cam != view) continue;
      const TripleKey key{view, r.sbj, r.obj, r.pred};
      if (!gt.contains(key)) throw Error("graph relation outside the instance/predicate universe");
      gt[key] = truth;
    }
  }
  return gt;
}

PredictionSet perfect_predictions(const GroundTruthSet& gt) {
  PredictionSet out;
  for (const auto& [key, truth] : gt) {
    out[key] = {truth.label == Label::positive ? 1.0 : 0.0, truth.parameter};
  }
  return out;
}

std::optional<double> average_precision(std::vector<ScoredLabel> ranking, std::size_t missed_positives) {
  std::size_t positives = missed_positives;
  for (const auto& r : ranking) positives += r.positive ? 1 : 0;
  if (positives == 0) return std::nullopt;
  std::sort(ranking.begin(), ranking.end(),
            [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });

  // one operating point per distinct score
  std::vector<double> recall;
  std::vector<double> precision;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < ranking.size();) {
    std::size_t j = i;
    while (j < ranking.size() && ranking[j].score == ranking[i].score) {
      tp += ranking[j].positive ? 1 : 0;
      ++j;
    }
    seen = j;
    recall.push_back(static_cast<double>(tp) / static_cast<double>(positives));
    precision.push_back(static_cast<double>(tp) / static_cast<double>(seen));
    i = j;
  }
  // monotone envelope from the right, then area under the step curve
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0;
  double previous = 0.0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    ap += (recall[i] - previous) * precision[i];
    previous = recall[i];
  }
  return ap;
}

ApReport average_precision(const PredictionSet& predictions, const GroundTruthSet& gt) {
  std::map<PredicateClass, std::vector<ScoredLabel>> rankings;
  std::map<PredicateClass, std::size_t> missed;
  std::set<PredicateClass> seen;
  for (const auto& [key, truth] : gt) {
    seen.insert(key.pred);
    if (truth.label == Label::ignored) continue;
    const auto it = predictions.find(key);
    if (it == predictions.end()) {
      if (truth.label == Label::positive) ++missed[key.pred];
      continue;
    }
    rankings[key.pred].push_back({it->second.score, truth.label == Label::positive});
  }
  for (const auto& [key, p] : predictions) {
    if (!gt.contains(key)) {
      seen.insert(key.pred);
      rankings[key.pred].push_back({p.score, false});
    }
  }
  ApReport report;
  double sum = 0.0;
  for (const PredicateClass& pred : seen) {
    const auto it = rankings.find(pred);
    auto ap = average_precision(it == rankings.end() ? std::vector<ScoredLabel>{} : it->second,
                                missed.contains(pred) ? missed.at(pred) : 0);
    if (!ap) {
      report.skipped.push_back(pred);
      continue;
    }
    report.ap[pred] = *ap;
    sum += *ap;
  }
  report.mean = report.ap.empty() ? 0.0 : sum / static_cast<double>(report.ap.size());
  return report;
}

double ng_mean_recall_at_k(const PredictionSet& predictions, const GroundTruthSet& gt, int k) {
  if (k < 1) throw Error("k must be at least 1");
  std::map<int, std::vector<std::pair<double, TripleKey>>> ranked;
  for (const auto& [key, p] : predictions) {
    const auto it = gt.find(key);
    if (it != gt.end() && it->second.label == Label::ignored) continue;
    ranked[key.view].emplace_back(p.score, key);
  }
  std::map<int, std::map<PredicateClass, std::size_t>> positives;
  for (const auto& [key, truth] : gt) {
    if (truth.label == Label::positive) ++positives[key.view][key.pred];
  }
  double total = 0.0;
  std::size_t views = 0;
  for (const auto& [view, per_pred] : positives) {
    auto& list = ranked[view];
    const auto top = std::min<std::size_t>(static_cast<std::size_t>(k), list.size());
    // score descending, ties broken by key for determinism
    std::partial_sort(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(top), list.end(),
                      [](const auto& a, const auto& b) {
                        return a.first != b.first ? a.first > b.first : a.second < b.second;
                      });
    std::map<PredicateClass, std::size_t> hits;
    for (std::size_t i = 0; i < top; ++i) {
      const auto it = gt.find(list[i].second);
      if (it != gt.end() && it->second.label == Label::positive) ++hits[list[i].second.pred];
    }
    double recall = 0.0;
    for (const auto& [pred, n] : per_pred) {
      recall += static_cast<double>(hits[pred]) / static_cast<double>(n);
    }
    total += recall / static_cast<double>(per_pred.size());
    ++views;
  }
  return views == 0 ? 0.0 : total / static_cast<double>(views);
}

MaeReport parameter_mae(const PredictionSet& predictions, const GroundTruthSet& gt) {
  MaeReport report;
  std::map<PredicateClass, double> sums;
  for (const auto& [key, truth] : gt) {
    if (!truth.exists || !key.pred.parametric()) continue;
    const auto it = predictions.find(key);
    if (it == predictions.end()) {
      ++report.missing;
      continue;
    }
    sums[key.pred] += std::abs(truth.parameter - it->second.parameter);
    ++report.count[key.pred];
  }
  for (const auto& [pred, sum] : sums) report.mae[pred] = sum / static_cast<double>(report.count[pred]);
  return report;
}

double smooth_l1(double x) {
  const double a = std::abs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

namespace {

template <typename Term>
double masked_mean(std::span<const int> f, std::span<const double> p, std::span<const double> p_hat, Term&& term) {
  if (f.size() != p.size() || p.size() != p_hat.size()) throw Error("loss inputs differ in length");
  double sum = 0.0;
  std::size_t active = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] != 0 && f[i] != 1) throw Error("loss flags must be 0 or 1");
    if (f[i] == 0) continue;
    sum += term(p[i], p_hat[i]);
    ++active;
  }
  return active == 0 ? 0.0 : sum / static_cast<double>(active);
}

}  // namespace

double loss_angle(std::span<const int> f, std::span<const double> p, std::span<const double> p_hat) {
  return masked_mean(f, p, p_hat, [](double a, double b) {
    const double d = std::cos(a) - b;
    return d * d;
  });
}

double loss_distance(std::span<const int> f, std::span<const double> p, std::span<const double> p_hat) {
  return masked_mean(f, p, p_hat, [](double a, double b) { return smooth_l1(a - b) / (a + 1.0); });
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw Error("median of an empty set");
  const std::size_t mid = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  return values[mid];
}

AggregateResult multiview_aggregate(const PredictionSet& per_view,
                                    const std::map<int, std::vector<int>>& visibility) {
  using Triple = std::tuple<int, int, PredicateClass>;
  std::map<Triple, std::pair<std::vector<double>, std::vector<double>>> samples;
  std::set<Triple> all;
  auto visible = [&](int view, int id) {
    const auto it = visibility.find(view);
    return it != visibility.end() && std::binary_search(it->second.begin(), it->second.end(), id);
  };
  for (const auto& [key, p] : per_view) {
    if (key.pred.frame == Frame::camera_dependent) continue;
    const Triple t{key.sbj, key.obj, key.pred};
    all.insert(t);
    if (!visible(key.view, key.sbj) || !visible(key.view, key.obj)) continue;
    samples[t].first.push_back(p.score);
    samples[t].second.push_back(p.parameter);
  }
  AggregateResult result;
  for (const Triple& t : all) {
    const auto it = samples.find(t);
    if (it == samples.end()) {
      ++result.omitted;
      continue;
    }
    const auto& [sbj, obj, pred] = t;
    result.predictions[{-1, sbj, obj, pred}] = {lower_median(it->second.first), lower_median(it->second.second)};
  }
  return result;
}

EvalReport evaluate(const PredictionSet& predictions, const GroundTruthSet& gt, LabelMode mode,
                    const MetricConfig& cfg) {
  validate(cfg);
  validate(predictions);
  EvalReport report;
  report.mode = mode;
  report.k = cfg.k;
  report.ap = average_precision(predictions, gt);
  report.ng_mean_recall = ng_mean_recall_at_k(predictions, gt, cfg.k);
  report.mae = parameter_mae(predictions, gt);
  report.predictions = predictions.size();
  report.ground_truth = gt.size();
  return report;
}

}  // namespace relgraph
