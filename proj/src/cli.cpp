#include "relgraph/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "relgraph/box_scene.hpp"
#include "relgraph/csg_expr.hpp"
#include "relgraph/graph_io.hpp"
#include "relgraph/metrics.hpp"
#include "relgraph/proto.hpp"
#include "relgraph/relations.hpp"

namespace relgraph::cli {

namespace {

namespace fs = std::filesystem;

struct SweepFlags {
  double spacing = 0.01;
  double fan_step = 0.5;
  double max_fan = 90.0;
  double margin = 0.01;
  std::string occlusion = "scene";

  void add(CLI::App& app) {
    app.add_option("--spacing", spacing, "Back-surface sweep spacing (m)")->capture_default_str();
    app.add_option("--fan-step", fan_step, "Corner fan step (deg)")->capture_default_str();
    app.add_option("--max-fan", max_fan, "Largest fan deviation (deg)")->capture_default_str();
    app.add_option("--margin", margin, "Front-surface margin (m)")->capture_default_str();
    app.add_option("--occlusion", occlusion, "Ray blockers: scene | pair")
        ->check(CLI::IsMember({"scene", "pair"}))
        ->capture_default_str();
  }

  [[nodiscard]] SweepConfig config() const {
    SweepConfig cfg;
    cfg.spacing = spacing;
    cfg.fan_step_deg = fan_step;
    cfg.max_fan_deg = max_fan;
    cfg.margin = margin;
    cfg.occlusion = occlusion == "pair" ? Occlusion::pair : Occlusion::scene;
    validate(cfg);
    return cfg;
  }
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

std::optional<CameraView> camera_for(const Scene& scene, const PredicateClass& pred, std::optional<int> camera) {
  if (pred.frame != Frame::camera_dependent) return std::nullopt;
  if (camera) return scene.camera(*camera);
  if (scene.cameras.empty()) throw Error("camera-dependent predicate but the scene has no cameras");
  return scene.cameras.front();
}

std::string proto_file_name(const ProtoRelation& p) {
  std::string name = "anchor" + std::to_string(p.anchor) + "_" + std::string(to_string(p.pred->kind)) + "_" +
                     std::string(to_string(p.pred->frame));
  if (p.camera) name += std::to_string(*p.camera);
  return name + ".rgpv";
}

ProtoRelation occupancy_proto(const OccupancyGrid& grid) {
  ProtoRelation p;
  p.kind = ScalarKind::occupancy;
  p.volume = ScalarGrid(grid.frame());
  for (const auto& [c, occupied] : grid) p.volume.set(c, 0.0f);
  return p;
}

std::string relation_line(const Relation& r) {
  std::string line = std::to_string(r.sbj) + ',' + std::to_string(r.obj) + ',' + to_string(r.pred) + ',';
  if (r.alpha) line += format_double(*r.alpha);
  line += ',';
  if (r.cam) line += std::to_string(*r.cam);
  return line;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Parametric scene-graph extraction, proto-relation volumes and evaluation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // extract
  auto* extract = app.add_subcommand("extract", "Extract the full parametric scene graph of a manifest");
  std::string ex_manifest;
  std::string ex_out;
  std::string ex_proto_dir;
  double ex_resolution = 0.01;
  double ex_support = 30.0;
  int threads = 0;
  bool ex_no_camera = false;
  bool ex_no_object = false;
  SweepFlags ex_sweep;
  extract->add_option("--manifest", ex_manifest, "Scene manifest (JSON)")->required()->check(CLI::ExistingFile);
  extract->add_option("--out", ex_out, "Output graph document")->required();
  extract->add_option("--resolution", ex_resolution, "Voxel size (m)")->capture_default_str();
  extract->add_option("--on-support", ex_support, "Support cone for 'on' (deg)")->capture_default_str();
  extract->add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();
  extract->add_flag("--no-camera", ex_no_camera, "Skip camera-dependent relations");
  extract->add_flag("--no-object", ex_no_object, "Skip object-dependent relations");
  extract->add_option("--proto-dir", ex_proto_dir, "Also write directional proto volumes for every anchor here");
  ex_sweep.add(*extract);

  // proto
  auto* proto = app.add_subcommand("proto", "Extract a proto-relation volume or evaluate a CSG expression");
  std::string pr_manifest;
  std::string pr_out;
  std::string pr_pred;
  std::string pr_expr;
  std::optional<int> pr_anchor;
  std::optional<int> pr_camera;
  std::optional<double> pr_threshold;
  std::optional<double> pr_max_distance;
  std::string pr_frame = "cam";
  double pr_resolution = 0.01;
  SweepFlags pr_sweep;
  proto->add_option("--manifest", pr_manifest, "Scene manifest (JSON)")->required()->check(CLI::ExistingFile);
  proto->add_option("--out", pr_out, "Output volume file")->required();
  auto* anchor_opt = proto->add_option("--anchor", pr_anchor, "Anchor instance id");
  auto* pred_opt = proto->add_option("--pred", pr_pred, "Predicate token, e.g. right@cam, front@obj, next_to");
  auto* expr_opt = proto->add_option("--expr", pr_expr, "CSG expression, e.g. 'intersect(right_of(5), front_of(9))'");
  proto->add_option("--frame", pr_frame, "Frame of directional leaves in --expr: cam | obj")
      ->check(CLI::IsMember({"cam", "obj"}))
      ->capture_default_str();
  proto->add_option("--camera", pr_camera, "Camera id for camera-dependent predicates (default: first camera)");
  proto->add_option("--threshold", pr_threshold, "Keep voxels with value <= threshold (writes occupancy)");
  proto->add_option("--max-distance", pr_max_distance, "Distance volumes: largest stored distance (m)");
  proto->add_option("--resolution", pr_resolution, "Voxel size (m)")->capture_default_str();
  proto->add_option("--threads", threads, "Worker threads (0 = all cores)");
  anchor_opt->needs(pred_opt);
  pred_opt->needs(anchor_opt);
  expr_opt->excludes(anchor_opt)->excludes(pred_opt);
  pr_sweep.add(*proto);

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate predictions against an extracted ground-truth graph");
  std::string ev_graph;
  std::string ev_predictions;
  std::string ev_perfect;
  std::string ev_report;
  std::string ev_mode = "parametric";
  MetricConfig metric_cfg;
  eval->add_option("--graph", ev_graph, "Ground-truth graph document")->required()->check(CLI::ExistingFile);
  auto* pred_file = eval->add_option("--predictions", ev_predictions, "Prediction records (CSV)")->check(CLI::ExistingFile);
  auto* perfect = eval->add_option("--write-perfect", ev_perfect, "Write perfect predictions for the graph and evaluate them");
  pred_file->excludes(perfect);
  eval->add_option("--mode", ev_mode, "Ground-truth labels: parametric | threshold")
      ->check(CLI::IsMember({"parametric", "threshold"}))
      ->capture_default_str();
  eval->add_option("--k", metric_cfg.k, "k of ng-mR@k")->capture_default_str();
  eval->add_option("--report", ev_report, "Write the report here instead of stdout");

  // query
  auto* query = app.add_subcommand("query", "Filter the relations of a graph");
  std::string q_graph;
  std::string q_sbj;
  std::string q_obj;
  std::string q_pred;
  std::string q_frame;
  std::optional<double> q_min;
  std::optional<double> q_max;
  std::optional<int> q_view;
  std::string q_format = "csv";
  query->add_option("--graph", q_graph, "Graph document")->required()->check(CLI::ExistingFile);
  query->add_option("--subject-class", q_sbj, "Subject class label");
  query->add_option("--object-class", q_obj, "Object class label");
  query->add_option("--pred", q_pred, "Predicate kind (front, behind, left, right, above, below, next_to, touching, on)");
  query->add_option("--frame", q_frame, "Predicate frame: cam | obj | free")->check(CLI::IsMember({"cam", "obj", "free"}));
  query->add_option("--min", q_min, "Smallest parameter (inclusive)");
  query->add_option("--max", q_max, "Largest parameter (inclusive)");
  query->add_option("--view", q_view, "Camera id");
  query->add_option("--format", q_format, "Output: csv | json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

  // gen-test-scene
  auto* gen = app.add_subcommand("gen-test-scene", "Write a random box scene with its analytic oracle");
  BoxSceneOptions gen_opts;
  std::string gen_dir;
  gen->add_option("--seed", gen_opts.seed, "Random seed")->capture_default_str();
  gen->add_option("--boxes", gen_opts.n_boxes, "Number of boxes")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--cameras", gen_opts.cameras, "Number of cameras (0-4)")->capture_default_str()->check(CLI::Range(0, 4));
  gen->add_option("--out-dir", gen_dir, "Directory for manifest.json, meshes/ and oracle.json")->required();

  // export
  auto* exp = app.add_subcommand("export", "Write graph-database bulk-import tables");
  std::string exp_graph;
  std::string exp_dir;
  exp->add_option("--graph", exp_graph, "Graph document")->required()->check(CLI::ExistingFile);
  exp->add_option("--out-dir", exp_dir, "Output directory for nodes.csv and edges.csv")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*extract) {
      const Scene scene = load_scene(ex_manifest);
      ExtractionConfig cfg;
      cfg.resolution = ex_resolution;
      cfg.sweep = ex_sweep.config();
      cfg.on_support_deg = ex_support;
      cfg.threads = threads;
      cfg.camera_dependent = !ex_no_camera;
      cfg.object_dependent = !ex_no_object;
      const SceneContext ctx(scene, cfg.resolution, cfg.threads);
      const SceneGraph graph = extract_scene_graph(ctx, cfg);
      write_graph(graph, ex_out);
      out << "wrote " << graph.relations.size() << " relations to " << ex_out << "\n";
      if (!ex_proto_dir.empty()) {
        fs::create_directories(ex_proto_dir);
        ProtoConfig pcfg;
        pcfg.sweep = cfg.sweep;
        std::size_t written = 0;
        for (const Instance& anchor : scene.instances) {
          for (const PredicateKind kind : kDirectionalKinds) {
            if (cfg.camera_dependent) {
              for (const CameraView& cam : scene.cameras) {
                const auto p = extract_proto(ctx, anchor.id, make_predicate(kind, Frame::camera_dependent), cam, pcfg);
                write_proto(p, fs::path(ex_proto_dir) / proto_file_name(p));
                ++written;
              }
            }
            if (cfg.object_dependent && anchor.directional_capable) {
              const auto p =
                  extract_proto(ctx, anchor.id, make_predicate(kind, Frame::object_dependent), std::nullopt, pcfg);
              write_proto(p, fs::path(ex_proto_dir) / proto_file_name(p));
              ++written;
            }
          }
        }
        out << "wrote " << written << " proto volumes to " << ex_proto_dir << "\n";
      }
    } else if (*proto) {
      if (pr_expr.empty() && !pr_anchor) throw Error("proto: give --anchor with --pred, or --expr");
      // parse before voxelizing so bad input fails fast
      const std::optional<CsgExpr> parsed =
          pr_expr.empty() ? std::nullopt : std::optional<CsgExpr>(parse_csg_expr(pr_expr));
      const auto pred = pr_expr.empty() ? parse_predicate(pr_pred) : std::nullopt;
      if (!parsed && !pred) throw Error("unknown predicate token '" + pr_pred + "'");
      const Scene scene = load_scene(pr_manifest);
      const SceneContext ctx(scene, pr_resolution, threads);
      ProtoConfig pcfg;
      pcfg.sweep = pr_sweep.config();
      pcfg.max_distance = pr_max_distance;
      if (parsed) {
        const CsgExpr& expr = *parsed;
        const Frame frame = pr_frame == "obj" ? Frame::object_dependent : Frame::camera_dependent;
        const OccupancyGrid grid = evaluate_csg_expr(expr, [&](const CsgExpr& leaf) {
          const PredicateClass pred = make_predicate(leaf.kind, is_directional(leaf.kind) ? frame : Frame::frame_free);
          const auto p = extract_proto(ctx, leaf.anchor, pred, camera_for(scene, pred, pr_camera), pcfg);
          const double fallback = pred.directional() ? 0.0 : (pred.kind == PredicateKind::touching ? 0.0 : 1.0);
          return threshold(p, leaf.threshold.value_or(pr_threshold.value_or(fallback)));
        });
        write_proto(occupancy_proto(grid), pr_out);
        out << "wrote " << grid.size() << " voxels for " << format_csg_expr(expr) << " to " << pr_out << "\n";
      } else {
        ProtoRelation p = extract_proto(ctx, *pr_anchor, *pred, camera_for(scene, *pred, pr_camera), pcfg);
        if (pr_threshold) {
          ProtoRelation occ = occupancy_proto(threshold(p, *pr_threshold));
          occ.anchor = p.anchor;
          occ.pred = p.pred;
          occ.camera = p.camera;
          p = std::move(occ);
        }
        write_proto(p, pr_out);
        out << "wrote " << p.volume.size() << " voxels to " << pr_out << "\n";
      }
    } else if (*eval) {
      if (ev_predictions.empty() == ev_perfect.empty()) {
        throw Error("eval: give exactly one of --predictions or --write-perfect");
      }
      const SceneGraph graph = read_graph(ev_graph);
      const LabelMode mode = ev_mode == "threshold" ? LabelMode::threshold : LabelMode::parametric;
      const GroundTruthSet gt = ground_truth_from_graph(graph, mode, metric_cfg);
      PredictionSet predictions;
      if (!ev_perfect.empty()) {
        predictions = perfect_predictions(gt);
        write_predictions(predictions, ev_perfect);
      } else {
        predictions = read_predictions(ev_predictions);
      }
      const std::string report = report_json(evaluate(predictions, gt, mode, metric_cfg));
      if (ev_report.empty()) {
        out << report;
      } else {
        write_file(ev_report, report);
      }
    } else if (*query) {
      GraphQuery q;
      if (!q_sbj.empty()) q.subject_class = q_sbj;
      if (!q_obj.empty()) q.object_class = q_obj;
      if (!q_pred.empty()) {
        q.kind = parse_kind(q_pred);
        if (!q.kind) throw Error("unknown predicate kind '" + q_pred + "'");
      }
      if (!q_frame.empty()) q.frame = parse_frame(q_frame);
      if (q_min || q_max) q.range = {q_min.value_or(-kInf), q_max.value_or(kInf)};
      q.view = q_view;
      const SceneGraph graph = read_graph(q_graph);
      const auto rels = run_query(graph, q);
      if (q_format == "json") {
        SceneGraph sub;
        sub.instances = graph.instances;
        sub.relations = rels;
        out << serialize_graph(sub);
      } else {
        out << "sbj,obj,pred,parameter,camera\n";
        for (const Relation& r : rels) out << relation_line(r) << "\n";
      }
    } else if (*gen) {
      const BoxScene bs = generate_box_scene(gen_opts);
      const fs::path dir(gen_dir);
      fs::create_directories(dir);
      write_scene(bs.scene, dir / "manifest.json", dir / "meshes");
      write_file(dir / "oracle.json", oracle_json(bs));
      out << "wrote " << bs.scene.instances.size() << " boxes to " << dir.string() << "\n";
    } else if (*exp) {
      const auto files = export_graphdb(read_graph(exp_graph), exp_dir);
      out << "wrote " << files.nodes.string() << " and " << files.edges.string() << "\n";
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace relgraph::cli
