// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "relgraph/box_scene.hpp"
#include "relgraph/graph_io.hpp"
#include "relgraph/metrics.hpp"
#include "relgraph/proto.hpp"
#include "relgraph/ray_engine.hpp"
#include "relgraph/relations.hpp"
#include "../support.hpp"

namespace relgraph {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

// gap between the facing faces of two boxes along an axis-aligned direction
double axis_gap(const Aabb& sbj, const Aabb& obj, const Vec3& v) {
  int axis = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(v[i]) > std::abs(v[axis])) axis = i;
  }
  return v[axis] > 0 ? sbj.lo[axis] - obj.hi[axis] : obj.lo[axis] - sbj.hi[axis];
}

std::string describe(const Aabb& b) {
  std::ostringstream s;
  s << "[" << b.lo.x() << "," << b.lo.y() << "," << b.lo.z() << " .. " << b.hi.x() << "," << b.hi.y() << ","
    << b.hi.z() << "]";
  return s.str();
}

// The 50 seed-fixed oracle scenes shared by the distance and direction checks.
struct OracleRun {
  std::vector<BoxScene> scenes;
  std::vector<SceneGraph> graphs;
  double seconds = 0.0;
  ExtractionConfig cfg;
};

const OracleRun& oracle_run() {
  static const OracleRun run = [] {
    OracleRun r;
    // the analytic oracle has no third-party occluders
    r.cfg.sweep.occlusion = Occlusion::pair;
    for (int s = 0; s < 50; ++s) {
      BoxSceneOptions opt;
      opt.seed = 1000 + s;
      opt.n_boxes = 5 + s % 11;
      opt.cameras = 1 + s % 4;
      r.scenes.push_back(generate_box_scene(opt));
    }
    const auto t0 = Clock::now();
    for (const auto& bs : r.scenes) r.graphs.push_back(extract_scene_graph(bs.scene, r.cfg));
    r.seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

Verdict distance_oracle() {
  Verdict v;
  const OracleRun& run = oracle_run();
  const double tol = 2.0 * std::sqrt(3.0) * 0.01;
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < run.scenes.size(); ++i) {
    for (const Relation& r : run.graphs[i].relations) {
      if (r.pred.kind != PredicateKind::next_to) continue;
      const double err = std::abs(*r.alpha - run.scenes[i].oracle.distance(r.sbj, r.obj));
      worst = std::max(worst, err);
      ++checked;
    }
  }
  v.require(checked > 0, "no next_to relations");
  v.require(worst <= tol, "distance error above tolerance");
  v.require(run.seconds < 60.0, "runtime");
  v.detail << checked << " next_to relations, max |error| " << worst << " m (tolerance " << tol << " m), "
           << run.scenes.size() << " scenes extracted in " << run.seconds << " s";
  return v;
}

// Mean and max direction error over isolated box pairs, with the spatial
// floor (sample spacing, front margin) pushed well below the smallest step.
std::pair<double, double> pair_errors(double step) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double sum = 0.0, worst = 0.0;
  int n = 0;
  for (int i = 0; i < 20; ++i) {
    const Aabb obj{Vec3(0, 0, 0), Vec3(0.3 + 0.3 * u(rng), 0.3 + 0.3 * u(rng), 0.3 + 0.3 * u(rng))};
    const Vec3 lo(obj.hi.x() + 0.3 + u(rng), -1 + 2 * u(rng), -1 + 2 * u(rng));
    const Aabb sbj{lo, lo + Vec3(0.2 + 0.3 * u(rng), 0.2 + 0.3 * u(rng), 0.2 + 0.3 * u(rng))};
    const Scene scene = testing::box_scene({obj, sbj});
    const RayScene rays(scene);
    SweepConfig cfg;
    cfg.fan_step_deg = step;
    cfg.spacing = 0.002;
    cfg.margin = 0.0005;
    const auto alpha = directional_angle(rays, 1, 0, Vec3::UnitX(), cfg);
    const auto exact = box_min_angle_deg(sbj, obj, 0, 1);
    if (!alpha || !exact) return {kInf, kInf};
    const double err = std::abs(*alpha - *exact);
    sum += err;
    worst = std::max(worst, err);
    ++n;
  }
  return {sum / n, worst};
}

Verdict direction_oracle() {
  Verdict v;
  const OracleRun& run = oracle_run();
  const double step = run.cfg.sweep.fan_step_deg;
  const double voxel = run.cfg.resolution;
  std::size_t checked = 0, violations = 0, missing = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < run.scenes.size(); ++i) {
    const BoxScene& bs = run.scenes[i];
    const SceneGraph& g = run.graphs[i];
    std::map<std::tuple<int, int, PredicateClass, std::optional<int>>, const Relation*> index;
    for (const Relation& r : g.relations) {
      if (!r.pred.directional()) continue;
      index[{r.sbj, r.obj, r.pred, r.cam}] = &r;
      const auto exact = bs.oracle.angle_deg(r.sbj, r.obj, r.v);
      ++checked;
      if (!exact) {
        ++violations;
        std::printf("  direction: relation without analytic counterpart %d %s %d\n", r.sbj,
                    to_string(r.pred).c_str(), r.obj);
        continue;
      }
      const double gap = axis_gap(bs.oracle.boxes[r.sbj], bs.oracle.boxes[r.obj], r.v);
      const double tol = step + to_degrees(std::atan(voxel / gap));
      const double err = std::abs(*r.alpha - *exact);
      worst = std::max(worst, err);
      if (err > tol) {
        ++violations;
        std::printf("  direction: %d %s %d alpha %.3f exact %.3f gap %.3f tolerance %.3f\n", r.sbj,
                    to_string(r.pred).c_str(), r.obj, *r.alpha, *exact, gap, tol);
      }
    }
    // every analytic relation within the fan range must have been extracted
    for (const CameraView& cam : bs.scene.cameras) {
      for (const PredicateKind k : kDirectionalKinds) {
        const Vec3 dir = camera_direction(cam, k, bs.scene.world_up);
        for (const Instance& s : bs.scene.instances) {
          for (const Instance& o : bs.scene.instances) {
            if (s.id == o.id) continue;
            const auto exact = bs.oracle.angle_deg(s.id, o.id, dir);
            if (!exact || *exact >= run.cfg.sweep.max_fan_deg - step) continue;
            if (!index.count({s.id, o.id, make_predicate(k, Frame::camera_dependent), cam.id})) ++missing;
          }
        }
      }
    }
  }
  v.require(violations == 0, "angle outside tolerance");
  v.require(missing == 0, "analytic relations not extracted");

  std::vector<double> steps = {2.0, 1.0, 0.5, 0.25};
  std::vector<std::pair<double, double>> errs;
  for (const double s : steps) errs.push_back(pair_errors(s));
  bool halves = true;
  std::ostringstream conv;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    conv << " step " << steps[i] << ": mean " << errs[i].first << " max " << errs[i].second << ";";
    if (i > 0) {
      halves = halves && errs[i].first <= 0.7 * errs[i - 1].first && errs[i].second <= 0.7 * errs[i - 1].second;
    }
  }
  v.require(halves, "error does not halve with the fan step");
  v.detail << checked << " directional relations, " << violations << " outside step + atan(voxel/gap), " << missing
           << " missing, max |error| " << worst << " deg; convergence:" << conv.str();
  return v;
}

Verdict proto_consistency() {
  Verdict v;
  const double res = 0.05;
  ProtoConfig pcfg;
  pcfg.sweep.spacing = res;
  pcfg.sweep.fan_step_deg = 2.0;
  pcfg.sweep.max_fan_deg = 45.0;
  const double taus[] = {0.0, 10.0, 20.0, 45.0};
  std::size_t cases = 0, exact_agree = 0, band = 0, discrepancies = 0;
  const auto t0 = Clock::now();
  for (int s = 0; s < 10; ++s) {
    BoxSceneOptions opt;
    opt.seed = 2000 + s;
    opt.n_boxes = 4 + s % 3;
    opt.cameras = 1;
    const BoxScene bs = generate_box_scene(opt);
    const SceneContext ctx(bs.scene, res, 1);
    for (const Instance& anchor : bs.scene.instances) {
      std::vector<std::pair<PredicateClass, std::optional<CameraView>>> preds;
      for (const PredicateKind k : kDirectionalKinds) {
        preds.push_back({make_predicate(k, Frame::camera_dependent), bs.scene.cameras.front()});
        if (anchor.directional_capable) preds.push_back({make_predicate(k, Frame::object_dependent), std::nullopt});
      }
      for (const auto& [pred, view] : preds) {
        const ProtoRelation proto = extract_proto(ctx, anchor.id, pred, view, pcfg);
        const Vec3 dir = view ? camera_direction(*view, pred.kind, bs.scene.world_up) : object_direction(anchor, pred.kind);
        for (const Instance& sbj : bs.scene.instances) {
          if (sbj.id == anchor.id) continue;
          const auto alpha = directional_angle(ctx.rays(), sbj.id, anchor.id, dir, pcfg.sweep);
          const double gap = std::max(axis_gap(bs.oracle.boxes[sbj.id], bs.oracle.boxes[anchor.id], dir), res);
          const double slack = pcfg.sweep.fan_step_deg + to_degrees(std::atan(res / gap));
          for (const double tau : taus) {
            ++cases;
            const bool placed = placement_test(proto, ctx.grid(sbj.id), tau);
            const bool related = alpha && *alpha <= tau;
            if (placed == related) {
              ++exact_agree;
              continue;
            }
            const double a = alpha ? *alpha : pcfg.sweep.max_fan_deg + pcfg.sweep.fan_step_deg;
            if (std::abs(a - tau) <= slack) {
              ++band;
              continue;
            }
            ++discrepancies;
            std::printf("  proto: scene %d anchor %d %s sbj %d tau %.0f placed %d angle %s sbj %s anchor %s\n", s,
                        anchor.id, to_string(pred).c_str(), sbj.id, tau, placed,
                        alpha ? std::to_string(*alpha).c_str() : "none", describe(bs.oracle.boxes[sbj.id]).c_str(),
                        describe(bs.oracle.boxes[anchor.id]).c_str());
          }
        }
      }
    }
  }
  const double rate = static_cast<double>(exact_agree + band) / static_cast<double>(cases);
  v.require(cases > 0 && rate >= 0.99, "agreement below 99%");
  v.detail << cases << " cases, " << exact_agree << " exact, " << band << " within one step + one voxel, "
           << discrepancies << " discrepancies, agreement " << 100.0 * rate << "% (" << seconds_since(t0) << " s)";
  return v;
}

Verdict exact_constants() {
  Verdict v;
  const MetricConfig cfg;
  v.require(cfg.angle_positive_deg == 10.0 && cfg.angle_negative_deg == 20.0, "angle cutoffs");
  v.require(cfg.distance_positive_m == 1.0 && cfg.distance_negative_m == 1.2, "distance cutoffs");
  v.require(cfg.k == 1000 && EvalReport{}.k == 1000, "k");

  const auto dir = make_predicate(PredicateKind::left, Frame::camera_dependent);
  const auto near = make_predicate(PredicateKind::next_to, Frame::frame_free);
  struct Row {
    PredicateClass pred;
    double alpha;
    Label label;
  };
  const Row rows[] = {
      {dir, 0.0, Label::positive},
      {dir, 10.0, Label::positive},
      {dir, std::nextafter(10.0, 11.0), Label::ignored},
      {dir, 20.0, Label::ignored},
      {dir, std::nextafter(20.0, 21.0), Label::negative},
      {dir, 90.0, Label::negative},
      {near, 0.0, Label::positive},
      {near, 1.0, Label::positive},
      {near, std::nextafter(1.0, 2.0), Label::ignored},
      {near, 1.2, Label::ignored},
      {near, std::nextafter(1.2, 2.0), Label::negative},
  };
  int bad = 0;
  for (const Row& r : rows) bad += threshold_label(r.pred, r.alpha, cfg) != r.label;
  bad += threshold_label(make_predicate(PredicateKind::on, Frame::frame_free), std::nullopt, cfg) != Label::positive;

  const std::pair<double, DistanceBin> bins[] = {
      {0.0, DistanceBin::touching},
      {std::nextafter(0.0, 1.0), DistanceBin::proximal},
      {0.3, DistanceBin::proximal},
      {std::nextafter(0.3, 1.0), DistanceBin::adjacent},
      {1.0, DistanceBin::adjacent},
      {std::nextafter(1.0, 2.0), DistanceBin::close},
      {3.0, DistanceBin::close},
      {std::nextafter(3.0, 4.0), DistanceBin::away},
  };
  for (const auto& [alpha, bin] : bins) bad += discretize_distance(alpha) != bin;
  v.require(bad == 0, "label or bin table");

  // touching holds exactly when the extracted distance is zero
  std::size_t touching = 0, zero = 0, mismatched = 0;
  const auto check_graph = [&](const SceneGraph& g) {
    std::map<std::pair<int, int>, double> dist;
    std::set<std::pair<int, int>> touch;
    for (const Relation& r : g.relations) {
      if (r.pred.kind == PredicateKind::next_to) dist[{r.sbj, r.obj}] = *r.alpha;
      if (r.pred.kind == PredicateKind::touching) touch.insert({r.sbj, r.obj});
    }
    for (const auto& [pair, d] : dist) {
      zero += d == 0.0;
      touching += touch.count(pair);
      mismatched += (d == 0.0) != (touch.count(pair) == 1);
    }
  };
  for (const SceneGraph& g : oracle_run().graphs) check_graph(g);
  ExtractionConfig ecfg;
  ecfg.camera_dependent = false;
  ecfg.object_dependent = false;
  check_graph(extract_scene_graph(testing::box_scene({testing::box(0, 0, 0, 1, 1, 1), testing::box(1, 0, 0, 2, 1, 1),
                                                       testing::box(0, 0, 1.005, 1, 1, 2)}),
                                  ecfg));
  v.require(zero > 0 && mismatched == 0, "touching iff distance 0");
  v.detail << std::size(rows) + 1 << " label rows, " << std::size(bins) << " bin rows, k = " << cfg.k << ", "
           << touching << " touching of " << zero << " zero-distance pairs, " << mismatched << " mismatches";
  return v;
}

double reference_ap(std::vector<ScoredLabel> ranking, std::size_t missed) {
  // precision envelope over distinct score thresholds
  std::sort(ranking.begin(), ranking.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  std::size_t total = missed;
  for (const auto& r : ranking) total += r.positive;
  std::vector<std::pair<double, double>> pr;  // recall, precision
  std::size_t tp = 0;
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    tp += ranking[i].positive;
    if (i + 1 < ranking.size() && ranking[i + 1].score == ranking[i].score) continue;
    pr.push_back({static_cast<double>(tp) / total, static_cast<double>(tp) / (i + 1)});
  }
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < pr.size(); ++i) {
    double best = 0.0;
    for (std::size_t j = i; j < pr.size(); ++j) best = std::max(best, pr[j].second);
    ap += (pr[i].first - prev_recall) * best;
    prev_recall = pr[i].first;
  }
  return ap;
}

Verdict metric_suite() {
  Verdict v;
  // three predictions: hit, miss, hit
  const auto ap3 = average_precision({{0.9, true}, {0.8, false}, {0.7, true}});
  v.require(ap3 && *ap3 == (1.0 + 2.0 / 3.0) / 2.0, "AP fixture");
  const auto ap_missed = average_precision({{0.9, true}, {0.5, false}}, 1);
  v.require(ap_missed && *ap_missed == 0.5, "AP with a missed positive");
  const auto ap_tie = average_precision({{0.5, true}, {0.5, false}});
  v.require(ap_tie && *ap_tie == 0.5, "AP tie");

  // recall: one view, predicates right (2 positives) and next_to (1 positive), k = 2
  const auto right = make_predicate(PredicateKind::right, Frame::camera_dependent);
  const auto near = make_predicate(PredicateKind::next_to, Frame::frame_free);
  GroundTruthSet gt;
  gt[{0, 0, 1, right}] = {true, 5.0, Label::positive};
  gt[{0, 1, 2, right}] = {true, 8.0, Label::positive};
  gt[{0, 2, 0, right}] = {false, 0.0, Label::negative};
  gt[{0, 0, 1, near}] = {true, 0.4, Label::positive};
  PredictionSet pred;
  pred[{0, 0, 1, right}] = {0.9, 3.0};
  pred[{0, 2, 0, right}] = {0.8, 30.0};
  pred[{0, 0, 1, near}] = {0.7, 0.6};
  pred[{0, 1, 2, right}] = {0.1, 18.0};
  const double recall = ng_mean_recall_at_k(pred, gt, 2);
  v.require(recall == (0.5 + 0.0) / 2.0, "ng-mR fixture");
  v.require(ng_mean_recall_at_k(pred, gt, 4) == 1.0, "ng-mR full recall");
  const MaeReport mae = parameter_mae(pred, gt);
  v.require(mae.mae.at(right) == (2.0 + 10.0) / 2.0 && std::abs(mae.mae.at(near) - 0.2) < 1e-15 &&
                mae.missing == 0,
            "MAE fixture");

  // monotone score transforms leave AP unchanged
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t invariant = 0, matches_reference = 0, fixtures = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<ScoredLabel> ranking;
    const int n = 1 + static_cast<int>(rng() % 10);
    for (int j = 0; j < n; ++j) ranking.push_back({std::round(u(rng) * 8.0) / 8.0, u(rng) < 0.4});
    const std::size_t missed = rng() % 3;
    const auto a = average_precision(ranking, missed);
    if (!a) continue;
    ++fixtures;
    auto squashed = ranking;
    for (auto& r : squashed) r.score = std::pow(r.score, 3.0) * 0.5 + 0.1;
    std::reverse(squashed.begin(), squashed.end());
    invariant += average_precision(squashed, missed) == a;
    matches_reference += std::abs(*a - reference_ap(ranking, missed)) < 1e-12;
  }
  v.require(fixtures > 500 && invariant == fixtures, "AP monotone invariance");
  v.require(matches_reference == fixtures, "AP against the reference envelope");
  v.detail << "AP 3-prediction fixture " << *ap3 << ", ng-mR@2 " << recall << ", MAE right " << mae.mae.at(right)
           << "; invariance " << invariant << "/" << fixtures << ", reference " << matches_reference << "/" << fixtures;
  return v;
}

Verdict losses() {
  Verdict v;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int zero_angle = 0, zero_distance = 0, matched = 0;
  double worst = 0.0;
  for (int c = 0; c < 20; ++c) {
    const std::size_t n = 1 + rng() % 10;
    std::vector<int> f(n);
    std::vector<double> pa(n), pd(n), ha(n), hd(n), exact_a(n);
    for (std::size_t i = 0; i < n; ++i) {
      f[i] = i == 0 ? 1 : static_cast<int>(rng() % 2);
      pa[i] = u(rng) * std::numbers::pi / 2.0;
      pd[i] = u(rng) * 4.0;
      ha[i] = u(rng) * 2.0 - 1.0;
      hd[i] = u(rng) * 4.0;
      exact_a[i] = std::cos(pa[i]);
    }
    zero_angle += loss_angle(f, pa, exact_a) == 0.0;
    zero_distance += loss_distance(f, pd, pd) == 0.0;

    // plain re-implementation
    double sa = 0.0, sd = 0.0;
    int active = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!f[i]) continue;
      ++active;
      const double da = std::cos(pa[i]) - ha[i];
      sa += da * da;
      const double x = std::abs(pd[i] - hd[i]);
      const double smooth = x < 1.0 ? 0.5 * x * x : x - 0.5;
      sd += smooth / (pd[i] + 1.0);
    }
    const double err = std::max(std::abs(loss_angle(f, pa, ha) - sa / active),
                                std::abs(loss_distance(f, pd, hd) - sd / active));
    worst = std::max(worst, err);
    matched += err <= 1e-9;
  }
  v.require(zero_angle == 20 && zero_distance == 20, "loss is not exactly zero at the target");
  v.require(matched == 20, "mismatch with the re-implementation");
  v.detail << "exact zeros " << zero_angle << "+" << zero_distance << "/40, reference agreement " << matched
           << "/20 (max |diff| " << worst << ")";
  return v;
}

double overall_mae(const PredictionSet& p, const GroundTruthSet& gt) {
  const MaeReport r = parameter_mae(p, gt);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [pred, m] : r.mae) {
    sum += m * r.count.at(pred);
    n += r.count.at(pred);
  }
  return sum / n;
}

Verdict multiview() {
  Verdict v;
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  bool identical = true;
  for (const int views : {1, 2, 5}) {
    PredictionSet base;
    for (int s = 0; s < 4; ++s) {
      for (int o = 0; o < 4; ++o) {
        if (s == o) continue;
        base[{-1, s, o, make_predicate(PredicateKind::next_to, Frame::frame_free)}] = {u(rng), 3.0 * u(rng)};
        base[{-1, s, o, make_predicate(PredicateKind::front, Frame::object_dependent)}] = {u(rng), 90.0 * u(rng)};
      }
    }
    PredictionSet per_view;
    std::map<int, std::vector<int>> visibility;
    for (int c = 0; c < views; ++c) {
      visibility[c] = {0, 1, 2, 3};
      for (const auto& [key, p] : base) {
        TripleKey k = key;
        k.view = c;
        per_view[k] = p;
      }
    }
    const AggregateResult agg = multiview_aggregate(per_view, visibility);
    identical = identical && agg.predictions == base && agg.omitted == 0;
  }
  v.require(identical, "identical views do not aggregate to the single set");

  // noisy views of real extracted parameters
  BoxSceneOptions opt;
  opt.seed = 3000;
  opt.n_boxes = 8;
  opt.cameras = 4;
  const BoxScene bs = generate_box_scene(opt);
  ExtractionConfig cfg;
  cfg.camera_dependent = false;
  const SceneGraph graph = extract_scene_graph(bs.scene, cfg);
  SceneGraph scene_level = graph;
  scene_level.visibility.clear();
  const GroundTruthSet gt = ground_truth_from_graph(scene_level, LabelMode::parametric);
  const std::map<int, std::vector<int>> everything = [&] {
    std::map<int, std::vector<int>> vis;
    for (const CameraView& cam : bs.scene.cameras) {
      for (const Instance& inst : bs.scene.instances) vis[cam.id].push_back(inst.id);
    }
    return vis;
  }();
  const double sigma[] = {0.02, 0.05, 0.1, 0.3};
  std::normal_distribution<double> noise;
  PredictionSet per_view;
  std::vector<PredictionSet> views(bs.scene.cameras.size());
  for (std::size_t c = 0; c < bs.scene.cameras.size(); ++c) {
    for (const auto& [key, truth] : gt) {
      if (!truth.exists) continue;
      const double scale = key.pred.directional() ? 90.0 : 3.0;
      const double p = std::max(0.0, truth.parameter + sigma[c] * scale * noise(rng));
      TripleKey k = key;
      views[c][k] = {1.0, p};
      k.view = bs.scene.cameras[c].id;
      per_view[k] = {1.0, p};
    }
  }
  const AggregateResult agg = multiview_aggregate(per_view, everything);
  double worst = 0.0;
  std::ostringstream per;
  for (const auto& view : views) {
    const double m = overall_mae(view, gt);
    worst = std::max(worst, m);
    per << m << " ";
  }
  const double median_mae = overall_mae(agg.predictions, gt);
  v.require(median_mae < worst, "median does not beat the worst view");
  v.detail << "identity for V in {1,2,5}: " << (identical ? "yes" : "no") << "; per-view MAE " << per.str()
           << "median MAE " << median_mae;
  return v;
}

ProtoRelation random_proto(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ProtoRelation p;
  p.kind = static_cast<ScalarKind>(rng() % 3);
  p.anchor = static_cast<int>(rng() % 5) - 1;
  if (u(rng) < 0.7) {
    p.pred = make_predicate(kDirectionalKinds[rng() % 6], Frame::camera_dependent);
    p.camera = static_cast<int>(rng() % 3);
  }
  p.volume = ScalarGrid(GridFrame{0.01 + u(rng), Vec3(u(rng) - 0.5, u(rng), -u(rng))});
  const int n = static_cast<int>(rng() % 200);
  for (int i = 0; i < n; ++i) {
    p.volume.set({static_cast<int>(rng() % 50) - 25, static_cast<int>(rng() % 50), -static_cast<int>(rng() % 50)},
                 static_cast<float>(90.0 * u(rng)));
  }
  return p;
}

std::vector<Relation> sorted(std::vector<Relation> rels) {
  std::sort(rels.begin(), rels.end(), relation_less);
  return rels;
}

Verdict round_trips() {
  Verdict v;
  std::mt19937_64 rng(17);
  testing::TempDir dir("acceptance_rt");
  int graphs = 0, db = 0, protos = 0, sizes = 0;
  for (int i = 0; i < 20; ++i) {
    const SceneGraph g = testing::random_graph(rng);
    write_graph(g, dir / "g.json");
    graphs += read_graph(dir / "g.json") == g;
    const auto files = export_graphdb(g, dir / "db");
    db += import_nodes(files.nodes) == g.instances && sorted(import_edges(files.edges)) == g.relations;
    const ProtoRelation p = random_proto(rng);
    write_proto(p, dir / "p.rgpv");
    protos += read_proto(dir / "p.rgpv") == p;
    sizes += std::filesystem::file_size(dir / "p.rgpv") == kProtoHeaderBytes + kProtoRecordBytes * p.volume.size();
  }
  v.require(graphs == 20 && db == 20 && protos == 20 && sizes == 20, "lossy round trip");
  v.detail << "graph JSON " << graphs << "/20, graph-DB CSV " << db << "/20, proto " << protos << "/20, size formula "
           << sizes << "/20";
  return v;
}

Verdict exhaustiveness() {
  Verdict v;
  const OracleRun& run = oracle_run();
  std::size_t exact_count = 0;
  for (std::size_t i = 0; i < run.graphs.size(); ++i) {
    const std::size_t n = run.scenes[i].scene.instances.size();
    const auto next_to = std::count_if(run.graphs[i].relations.begin(), run.graphs[i].relations.end(),
                                       [](const Relation& r) { return r.pred.kind == PredicateKind::next_to; });
    exact_count += static_cast<std::size_t>(next_to) == n * (n - 1);
  }
  std::size_t identical = 0;
  const int reruns = 5;
  for (int i = 0; i < reruns; ++i) {
    ExtractionConfig cfg;
    cfg.threads = 1;
    const std::string a = serialize_graph(extract_scene_graph(run.scenes[i].scene, cfg));
    cfg.threads = 4;
    const std::string b = serialize_graph(extract_scene_graph(run.scenes[i].scene, cfg));
    identical += a == b;
  }
  v.require(exact_count == run.graphs.size(), "next_to count");
  v.require(identical == reruns, "re-extraction differs");
  v.detail << exact_count << "/" << run.graphs.size() << " scenes with n(n-1) next_to, " << identical << "/" << reruns
           << " byte-identical re-extractions";
  return v;
}

}  // namespace
}  // namespace relgraph

int main() {
  using namespace relgraph;
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"distance oracle", distance_oracle},
      {"directional oracle", direction_oracle},
      {"proto/relation consistency", proto_consistency},
      {"exact constants", exact_constants},
      {"metric suite", metric_suite},
      {"loss functions", losses},
      {"multi-view aggregation", multiview},
      {"round trips", round_trips},
      {"exhaustiveness", exhaustiveness},
  };
  int failed = 0;
  int n = 0;
  for (const auto& [name, check] : criteria) {
    ++n;
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    failed += !v.pass;
    std::printf("%s %d %s: %s\n", v.pass ? "PASS" : "FAIL", n, name, v.detail.str().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
