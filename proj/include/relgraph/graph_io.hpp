#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relgraph/metrics.hpp"
#include "relgraph/relations.hpp"

namespace relgraph {

inline constexpr int kGraphSchemaVersion = 1;
inline constexpr std::string_view kGraphSchemaName = "relgraph.scene_graph";

/// Deterministic JSON document; doubles are written in shortest round-trip form.
std::string serialize_graph(const SceneGraph& graph);
/// Throws on schema/version mismatch or malformed records.
SceneGraph deserialize_graph(std::string_view text);
void write_graph(const SceneGraph& graph, const std::filesystem::path& path);
SceneGraph read_graph(const std::filesystem::path& path);

/// Bulk-import tables for property-graph databases.
struct GraphDbFiles {
  std::filesystem::path nodes;  // nodes.csv: id,class_label,directional
  std::filesystem::path edges;  // edges.csv: sbj,obj,predicate,frame,parameter,camera,vx,vy,vz
};

GraphDbFiles export_graphdb(const SceneGraph& graph, const std::filesystem::path& out_dir);
std::vector<InstanceInfo> import_nodes(const std::filesystem::path& nodes_csv);
std::vector<Relation> import_edges(const std::filesystem::path& edges_csv);

/// Splits RFC 4180 text into records of fields.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
/// Quotes a field when it contains a comma, quote or line break.
std::string csv_field(std::string_view field);

/// Conjunctive structured filter over a graph.
struct GraphQuery {
  std::optional<std::string> subject_class;
  std::optional<std::string> object_class;
  std::optional<PredicateKind> kind;
  std::optional<Frame> frame;
  /// Inclusive parameter range; only relations carrying a parameter match.
  std::optional<std::pair<double, double>> range;
  /// Keeps camera-dependent relations of this view; camera-independent
  /// relations hold in every view and are kept.
  std::optional<int> view;
};

void validate(const GraphQuery& q);
std::vector<Relation> run_query(const SceneGraph& graph, const GraphQuery& q);

/// Prediction records: header `view,sbj,obj,pred,score,parameter`, predicate
/// as a token such as `right@cam`, `front@obj` or `next_to`.
PredictionSet read_predictions(const std::filesystem::path& path);
void write_predictions(const PredictionSet& predictions, const std::filesystem::path& path);

/// Structured metric report (JSON).
std::string report_json(const EvalReport& report);

}  // namespace relgraph
