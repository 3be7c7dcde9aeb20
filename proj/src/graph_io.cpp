#include "relgraph/graph_io.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include <nlohmann/json.hpp>

namespace relgraph {

namespace {

using nlohmann::json;

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

template <typename T>
T parse_number(std::string_view text, const std::string& what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error("malformed " + what + ": '" + std::string(text) + "'");
  }
  return value;
}

std::optional<PredicateClass> predicate_from(const std::string& kind, const std::string& frame) {
  const auto k = parse_kind(kind);
  const auto f = parse_frame(frame);
  if (!k || !f) return std::nullopt;
  const PredicateClass p{*k, *f};
  if (!p.valid()) return std::nullopt;
  return p;
}

json relation_json(const Relation& r) {
  json j;
  j["sbj"] = r.sbj;
  j["obj"] = r.obj;
  j["pred"] = std::string(to_string(r.pred.kind));
  j["frame"] = std::string(to_string(r.pred.frame));
  j["alpha"] = r.alpha ? json(*r.alpha) : json(nullptr);
  j["cam"] = r.cam ? json(*r.cam) : json(nullptr);
  j["v"] = {r.v.x(), r.v.y(), r.v.z()};
  return j;
}

Relation relation_from_json(const json& j, std::size_t index) {
  const std::string where = "relation " + std::to_string(index) + ": ";
  try {
    Relation r;
    r.sbj = j.at("sbj").get<int>();
    r.obj = j.at("obj").get<int>();
    const auto pred = predicate_from(j.at("pred").get<std::string>(), j.at("frame").get<std::string>());
    if (!pred) throw Error("unknown predicate");
    r.pred = *pred;
    if (!j.at("alpha").is_null()) r.alpha = j.at("alpha").get<double>();
    if (!j.at("cam").is_null()) r.cam = j.at("cam").get<int>();
    const json& v = j.at("v");
    if (!v.is_array() || v.size() != 3) throw Error("v must be a 3-vector");
    r.v = Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
    validate(r);
    return r;
  } catch (const json::exception& e) {
    throw Error(where + e.what());
  } catch (const Error& e) {
    throw Error(where + e.what());
  }
}

std::string relation_edge_row(const Relation& r) {
  std::string row = std::to_string(r.sbj) + ',' + std::to_string(r.obj) + ',' +
                    std::string(to_string(r.pred.kind)) + ',' + std::string(to_string(r.pred.frame)) + ',';
  if (r.alpha) row += format_double(*r.alpha);
  row += ',';
  if (r.cam) row += std::to_string(*r.cam);
  for (int i = 0; i < 3; ++i) row += ',' + format_double(r.v[i]);
  return row;
}

constexpr std::string_view kNodesHeader = "id,class_label,directional";
constexpr std::string_view kEdgesHeader = "sbj,obj,predicate,frame,parameter,camera,vx,vy,vz";
constexpr std::string_view kPredictionsHeader = "view,sbj,obj,pred,score,parameter";

std::string join_header(const std::vector<std::string>& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
  return out;
}

std::vector<std::vector<std::string>> read_table(const std::filesystem::path& path, std::string_view header) {
  auto rows = parse_csv(read_text(path));
  if (rows.empty() || join_header(rows.front()) != header) {
    throw Error(path.string() + ": expected header '" + std::string(header) + "'");
  }
  rows.erase(rows.begin());
  return rows;
}

}  // namespace

std::string serialize_graph(const SceneGraph& graph) {
  json doc;
  doc["schema"] = kGraphSchemaName;
  doc["version"] = kGraphSchemaVersion;
  json instances = json::array();
  for (const InstanceInfo& i : graph.instances) {
    instances.push_back({{"id", i.id}, {"label", i.class_label}, {"directional", i.directional_capable}});
  }
  doc["instances"] = std::move(instances);
  json visibility = json::array();
  for (const auto& [cam, ids] : graph.visibility) visibility.push_back({{"camera", cam}, {"visible", ids}});
  doc["visibility"] = std::move(visibility);
  json relations = json::array();
  for (const Relation& r : graph.relations) relations.push_back(relation_json(r));
  doc["relations"] = std::move(relations);
  return doc.dump(1) + "\n";
}

SceneGraph deserialize_graph(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("malformed graph document: ") + e.what());
  }
  try {
    if (doc.at("schema").get<std::string>() != kGraphSchemaName) throw Error("not a scene graph document");
    if (const int version = doc.at("version").get<int>(); version != kGraphSchemaVersion) {
      throw Error("unsupported graph schema version " + std::to_string(version));
    }
    SceneGraph graph;
    for (const json& i : doc.at("instances")) {
      graph.instances.push_back(
          {i.at("id").get<int>(), i.at("label").get<std::string>(), i.at("directional").get<bool>()});
    }
    for (const json& v : doc.at("visibility")) {
      graph.visibility[v.at("camera").get<int>()] = v.at("visible").get<std::vector<int>>();
    }
    std::size_t index = 0;
    for (const json& r : doc.at("relations")) graph.relations.push_back(relation_from_json(r, index++));
    if (!std::is_sorted(graph.relations.begin(), graph.relations.end(), relation_less)) {
      throw Error("relations are not in canonical order");
    }
    return graph;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed graph document: ") + e.what());
  }
}

void write_graph(const SceneGraph& graph, const std::filesystem::path& path) {
  write_text(path, serialize_graph(graph));
}

SceneGraph read_graph(const std::filesystem::path& path) {
  return deserialize_graph(read_text(path));
}

std::string csv_field(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty()) throw Error("csv: quote inside an unquoted field");
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (quoted) throw Error("csv: unterminated quoted field");
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

GraphDbFiles export_graphdb(const SceneGraph& graph, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (!std::filesystem::is_directory(out_dir)) throw Error("cannot create directory " + out_dir.string());
  GraphDbFiles files{out_dir / "nodes.csv", out_dir / "edges.csv"};
  std::string nodes = std::string(kNodesHeader) + "\n";
  for (const InstanceInfo& i : graph.instances) {
    nodes += std::to_string(i.id) + ',' + csv_field(i.class_label) + ',' + (i.directional_capable ? "true" : "false") +
             "\n";
  }
  std::string edges = std::string(kEdgesHeader) + "\n";
  for (const Relation& r : graph.relations) edges += relation_edge_row(r) + "\n";
  write_text(files.nodes, nodes);
  write_text(files.edges, edges);
  return files;
}

std::vector<InstanceInfo> import_nodes(const std::filesystem::path& nodes_csv) {
  std::vector<InstanceInfo> out;
  for (const auto& row : read_table(nodes_csv, kNodesHeader)) {
    if (row.size() != 3) throw Error(nodes_csv.string() + ": node rows have 3 fields");
    if (row[2] != "true" && row[2] != "false") throw Error(nodes_csv.string() + ": bad directional flag");
    out.push_back({parse_number<int>(row[0], "node id"), row[1], row[2] == "true"});
  }
  return out;
}

std::vector<Relation> import_edges(const std::filesystem::path& edges_csv) {
  std::vector<Relation> out;
  std::size_t line = 1;
  for (const auto& row : read_table(edges_csv, kEdgesHeader)) {
    ++line;
    const std::string where = edges_csv.string() + ":" + std::to_string(line) + ": ";
    if (row.size() != 9) throw Error(where + "edge rows have 9 fields");
    Relation r;
    r.sbj = parse_number<int>(row[0], "subject id");
    r.obj = parse_number<int>(row[1], "object id");
    const auto pred = predicate_from(row[2], row[3]);
    if (!pred) throw Error(where + "unknown predicate " + row[2] + "@" + row[3]);
    r.pred = *pred;
    if (!row[4].empty()) r.alpha = parse_number<double>(row[4], "parameter");
    if (!row[5].empty()) r.cam = parse_number<int>(row[5], "camera id");
    for (int i = 0; i < 3; ++i) r.v[i] = parse_number<double>(row[6 + i], "direction");
    try {
      validate(r);
    } catch (const Error& e) {
      throw Error(where + e.what());
    }
    out.push_back(r);
  }
  return out;
}

void validate(const GraphQuery& q) {
  if (q.kind && q.frame && !PredicateClass{*q.kind, *q.frame}.valid()) {
    throw Error("query: predicate " + std::string(to_string(*q.kind)) + " does not admit frame " +
                std::string(to_string(*q.frame)));
  }
  if (q.range) {
    if (q.kind && !is_directional(*q.kind) && !is_distance_based(*q.kind)) {
      throw Error("query: parameter range on a predicate without parameter");
    }
    if (!(q.range->first <= q.range->second)) throw Error("query: parameter range min > max");
  }
}

std::vector<Relation> run_query(const SceneGraph& graph, const GraphQuery& q) {
  validate(q);
  std::map<int, const std::string*> labels;
  for (const InstanceInfo& i : graph.instances) labels[i.id] = &i.class_label;
  auto label_is = [&](int id, const std::string& want) {
    const auto it = labels.find(id);
    return it != labels.end() && *it->second == want;
  };
  std::vector<Relation> out;
  for (const Relation& r : graph.relations) {
    if (q.subject_class && !label_is(r.sbj, *q.subject_class)) continue;
    if (q.object_class && !label_is(r.obj, *q.object_class)) continue;
    if (q.kind && r.pred.kind != *q.kind) continue;
    if (q.frame && r.pred.frame != *q.frame) continue;
    if (q.range && (!r.alpha || *r.alpha < q.range->first || *r.alpha > q.range->second)) continue;
    if (q.view && r.cam && *r.cam != *q.view) continue;
    out.push_back(r);
  }
  return out;
}

PredictionSet read_predictions(const std::filesystem::path& path) {
  PredictionSet out;
  std::size_t line = 1;
  for (const auto& row : read_table(path, kPredictionsHeader)) {
    ++line;
    const std::string where = path.string() + ":" + std::to_string(line) + ": ";
    if (row.size() != 6) throw Error(where + "prediction rows have 6 fields");
    TripleKey key;
    key.view = parse_number<int>(row[0], "view");
    key.sbj = parse_number<int>(row[1], "subject id");
    key.obj = parse_number<int>(row[2], "object id");
    const auto pred = parse_predicate(row[3]);
    if (!pred) throw Error(where + "unknown predicate " + row[3]);
    key.pred = *pred;
    const Prediction p{parse_number<double>(row[4], "score"), parse_number<double>(row[5], "parameter")};
    if (!out.emplace(key, p).second) throw Error(where + "duplicate prediction");
  }
  validate(out);
  return out;
}

void write_predictions(const PredictionSet& predictions, const std::filesystem::path& path) {
  std::string text = std::string(kPredictionsHeader) + "\n";
  for (const auto& [key, p] : predictions) {
    text += std::to_string(key.view) + ',' + std::to_string(key.sbj) + ',' + std::to_string(key.obj) + ',' +
            to_string(key.pred) + ',' + format_double(p.score) + ',' + format_double(p.parameter) + "\n";
  }
  write_text(path, text);
}

std::string report_json(const EvalReport& report) {
  json doc;
  doc["mode"] = report.mode == LabelMode::threshold ? "threshold" : "parametric";
  doc["k"] = report.k;
  doc["predictions"] = report.predictions;
  doc["ground_truth"] = report.ground_truth;
  doc["mAP"] = report.ap.mean;
  json ap = json::object();
  for (const auto& [pred, value] : report.ap.ap) ap[to_string(pred)] = value;
  doc["AP"] = std::move(ap);
  json skipped = json::array();
  for (const auto& pred : report.ap.skipped) skipped.push_back(to_string(pred));
  doc["skipped_predicates"] = std::move(skipped);
  doc["ng_mR@k"] = report.ng_mean_recall;
  json mae = json::object();
  for (const auto& [pred, value] : report.mae.mae) {
    mae[to_string(pred)] = {{"mae", value}, {"count", report.mae.count.at(pred)}};
  }
  doc["MAE"] = std::move(mae);
  doc["missing_parameters"] = report.mae.missing;
  return doc.dump(2) + "\n";
}

}  // namespace relgraph
