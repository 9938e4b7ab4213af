#include "fogpipe/graph_cloud.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "fogpipe/geo.hpp"

namespace fogpipe::cloud {

namespace fs = std::filesystem;

namespace {

constexpr int64_t kInfCost = std::numeric_limits<int64_t>::max() / 4;

std::string obs_node_id(const std::string& vehicle_id, int64_t ts_ms) {
  return "o:" + vehicle_id + ":" + std::to_string(ts_ms);
}

const char* to_string(GraphEdgeKind kind) {
  return kind == GraphEdgeKind::kNext ? "NEXT" : "AT";
}

}  // namespace

const char* to_string(NodeRole role) {
  switch (role) {
    case NodeRole::kStop: return "stop";
    case NodeRole::kMove: return "move";
    case NodeRole::kStation: return "station";
  }
  return "unknown";
}

size_t Snapshot::next_edge_count() const {
  size_t n = 0;
  for (const auto& e : edges)
    if (e.kind == GraphEdgeKind::kNext) ++n;
  return n;
}

size_t Snapshot::at_edge_count() const {
  size_t n = 0;
  for (const auto& e : edges)
    if (e.kind == GraphEdgeKind::kAt) ++n;
  return n;
}

// --- TimeTree -------------------------------------------------------------------

bool TimeTree::insert(const HourBucket& hour, size_t snapshot_index) {
  return hours_.emplace(hour, snapshot_index).second;
}

std::vector<size_t> TimeTree::resolve_range(const HourBucket& from, const HourBucket& to) const {
  if (to < from) throw QueryError("range error: from > to");
  std::vector<size_t> out;
  for (auto it = hours_.lower_bound(from); it != hours_.end() && !(to < it->first); ++it)
    out.push_back(it->second);
  return out;
}

bool TimeTree::contains(const HourBucket& hour) const { return hours_.count(hour) > 0; }

std::vector<int> TimeTree::years() const {
  std::vector<int> out;
  for (const auto& [h, idx] : hours_)
    if (out.empty() || out.back() != h.year) out.push_back(h.year);
  return out;
}

std::vector<int> TimeTree::months(int year) const {
  std::vector<int> out;
  for (const auto& [h, idx] : hours_) {
    if (h.year != year) continue;
    if (out.empty() || out.back() != h.month) out.push_back(h.month);
  }
  return out;
}

std::vector<int> TimeTree::days(int year, int month) const {
  std::vector<int> out;
  for (const auto& [h, idx] : hours_) {
    if (h.year != year || h.month != month) continue;
    if (out.empty() || out.back() != h.day) out.push_back(h.day);
  }
  return out;
}

std::vector<int> TimeTree::hours(int year, int month, int day) const {
  std::vector<int> out;
  for (const auto& [h, idx] : hours_) {
    if (h.year != year || h.month != month || h.day != day) continue;
    out.push_back(h.hour);
  }
  return out;
}

// --- StationGraph / PageRank ------------------------------------------------------

int StationGraph::index_of(const std::string& station) const {
  auto it = std::lower_bound(stations.begin(), stations.end(), station);
  if (it == stations.end() || *it != station) return -1;
  return static_cast<int>(it - stations.begin());
}

PageRankResult pagerank_scores(const StationGraph& graph, const PageRankParams& params) {
  if (params.damping <= 0.0 || params.damping >= 1.0)
    throw QueryError("pagerank damping must lie in (0, 1)");
  if (params.tol <= 0.0 || params.max_iter < 1)
    throw QueryError("pagerank tol must be > 0 and max_iter >= 1");

  PageRankResult result;
  const size_t n = graph.stations.size();
  if (n == 0) return result;

  std::vector<double> out_weight(n, 0.0);
  for (const auto& [key, w] : graph.edges) out_weight[static_cast<size_t>(key.first)] += w;

  const double d = params.damping;
  std::vector<double> x(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n, 0.0);

  for (int iter = 1; iter <= params.max_iter; ++iter) {
    double dangling = 0.0;
    for (size_t i = 0; i < n; ++i)
      if (out_weight[i] == 0.0) dangling += x[i];
    const double base = (1.0 - d) / static_cast<double>(n) + d * dangling / static_cast<double>(n);
    std::fill(next.begin(), next.end(), base);
    for (const auto& [key, w] : graph.edges) {
      const auto u = static_cast<size_t>(key.first);
      const auto v = static_cast<size_t>(key.second);
      next[v] += d * x[u] * w / out_weight[u];
    }
    double delta = 0.0;
    for (size_t i = 0; i < n; ++i) delta += std::abs(next[i] - x[i]);
    x.swap(next);
    result.iterations = iter;
    if (delta <= params.tol) break;
  }

  result.scores.reserve(n);
  for (size_t i = 0; i < n; ++i) result.scores.emplace_back(graph.stations[i], x[i]);
  return result;
}

// --- QueryResult rendering --------------------------------------------------------

std::string QueryResult::to_table() const {
  std::ostringstream out;
  out << kind << " over [" << fogpipe::to_string(from) << ", " << fogpipe::to_string(to) << "], "
      << snapshot_ids.size() << " snapshot(s)\n";
  if (kind == "shortest_path") {
    if (!path_found) {
      out << "  no path\n";
    } else {
      out << "  cost: " << format_double(cost_s) << " s\n  path:";
      for (const auto& node : path) out << " " << node;
      out << "\n";
    }
  } else if (kind == "degree") {
    out << "  station  stop  move  total\n";
    for (const auto& e : degrees)
      out << "  " << e.station << "  " << e.stop_degree << "  " << e.move_degree << "  " << e.total
          << "\n";
  } else if (kind == "pagerank") {
    out << "  iterations: " << iterations << "\n  station  score\n";
    for (const auto& [station, score] : scores)
      out << "  " << station << "  " << format_double(score) << "\n";
  }
  return out.str();
}

std::string QueryResult::to_machine() const {
  std::ostringstream out;
  out << "kind=" << kind << "\n";
  out << "from=" << fogpipe::to_string(from) << "\n";
  out << "to=" << fogpipe::to_string(to) << "\n";
  out << "snapshots=";
  for (size_t i = 0; i < snapshot_ids.size(); ++i) {
    if (i) out << "|";
    out << snapshot_ids[i];
  }
  out << "\n";
  if (kind == "shortest_path") {
    out << "found=" << (path_found ? 1 : 0) << "\n";
    if (path_found) {
      out << "cost_s=" << format_double(cost_s) << "\n";
      out << "path=";
      for (size_t i = 0; i < path.size(); ++i) {
        if (i) out << "|";
        out << path[i];
      }
      out << "\n";
    }
  } else if (kind == "degree") {
    for (const auto& e : degrees)
      out << "degree=" << e.station << "," << e.stop_degree << "," << e.move_degree << ","
          << e.total << "\n";
  } else if (kind == "pagerank") {
    out << "iterations=" << iterations << "\n";
    for (const auto& [station, score] : scores)
      out << "score=" << station << "," << format_double(score) << "\n";
  }
  return out.str();
}

// --- GraphStore -------------------------------------------------------------------

GraphStore::GraphStore(std::vector<StationInfo> stations, const StoreConfig& cfg)
    : stations_(std::move(stations)), cfg_(cfg) {
  std::sort(stations_.begin(), stations_.end(),
            [](const StationInfo& a, const StationInfo& b) { return a.id < b.id; });
  for (size_t i = 0; i < stations_.size(); ++i) {
    if (!station_index_.emplace(stations_[i].id, i).second)
      throw IngestError("duplicate station id: " + stations_[i].id);
  }
}

const StationInfo* GraphStore::find_station(const std::string& id) const {
  auto it = station_index_.find(id);
  return it == station_index_.end() ? nullptr : &stations_[it->second];
}

const Snapshot& GraphStore::ingest_batch(const fabric::Batch& batch) {
  if (ingested_batch_ids_.count(batch.batch_id))
    throw IngestError("batch " + std::to_string(batch.batch_id) + " already ingested");
  if (tree_.contains(batch.hour))
    throw IngestError("hour " + fogpipe::to_string(batch.hour) + " already has a snapshot");
  for (const auto& t : batch.tuples) {
    if (hour_bucket_from_ms(t.tuple.ts_ms) != batch.hour)
      throw IngestError("corrupt batch " + std::to_string(batch.batch_id) + ": tuple at ts " +
                        std::to_string(t.tuple.ts_ms) + " outside hour " +
                        fogpipe::to_string(batch.hour));
  }

  Snapshot snap;
  snap.batch_id = batch.batch_id;
  snap.hour = batch.hour;
  snap.observations.reserve(batch.tuples.size());
  for (const auto& t : batch.tuples) {
    ObsNode node;
    node.id = obs_node_id(t.tuple.vehicle_id, t.tuple.ts_ms);
    node.role = t.label == MotionLabel::kStop ? NodeRole::kStop : NodeRole::kMove;
    node.vehicle_id = t.tuple.vehicle_id;
    node.ts_ms = t.tuple.ts_ms;
    node.lat = t.tuple.lat;
    node.lon = t.tuple.lon;
    snap.observations.push_back(std::move(node));
  }
  std::sort(snap.observations.begin(), snap.observations.end(),
            [](const ObsNode& a, const ObsNode& b) {
              if (a.vehicle_id != b.vehicle_id) return a.vehicle_id < b.vehicle_id;
              return a.ts_ms < b.ts_ms;
            });

  // NEXT edges: ts-consecutive observations of one vehicle inside the batch.
  for (size_t i = 1; i < snap.observations.size(); ++i) {
    const ObsNode& prev = snap.observations[i - 1];
    const ObsNode& cur = snap.observations[i];
    if (prev.vehicle_id != cur.vehicle_id) continue;
    GraphEdge e;
    e.src = prev.id;
    e.dst = cur.id;
    e.kind = GraphEdgeKind::kNext;
    e.weight = static_cast<double>(cur.ts_ms - prev.ts_ms) / 1000.0;
    snap.edges.push_back(std::move(e));
  }

  // AT edges: observation to every station within the radius.
  for (const ObsNode& obs : snap.observations) {
    for (const StationInfo& st : stations_) {
      double dist = geo_distance_m(obs.lat, obs.lon, st.lat, st.lon);
      if (dist <= cfg_.station_radius_m) {
        GraphEdge e;
        e.src = obs.id;
        e.dst = st.id;
        e.kind = GraphEdgeKind::kAt;
        e.weight = 0.0;
        snap.edges.push_back(std::move(e));
      }
    }
  }

  snapshots_.push_back(std::move(snap));
  const Snapshot& stored = snapshots_.back();
  tree_.insert(batch.hour, snapshots_.size() - 1);
  ingested_batch_ids_.insert(batch.batch_id);
  if (!snapshot_dir_.empty()) persist(batch, stored);
  return stored;
}

std::vector<const Snapshot*> GraphStore::resolve_range(const HourBucket& from,
                                                       const HourBucket& to) const {
  std::vector<const Snapshot*> out;
  for (size_t idx : tree_.resolve_range(from, to)) out.push_back(&snapshots_[idx]);
  return out;
}

// Union graph over a snapshot range: all stations plus the range's
// observations; NEXT edges keep their travel time in integer milliseconds
// (exact shortest-path arithmetic), AT edges cost nothing in either
// direction.
namespace {

struct UnionGraph {
  std::vector<std::string> ids;
  std::unordered_map<std::string, int> index;
  std::vector<std::vector<std::pair<int, int64_t>>> adj;
  std::vector<std::vector<std::pair<int, int64_t>>> radj;

  int add_node(const std::string& id) {
    auto it = index.find(id);
    if (it != index.end()) return it->second;
    int i = static_cast<int>(ids.size());
    ids.push_back(id);
    index.emplace(id, i);
    adj.emplace_back();
    radj.emplace_back();
    return i;
  }

  void add_edge(int u, int v, int64_t w) {
    adj[u].emplace_back(v, w);
    radj[v].emplace_back(u, w);
  }

  // Neighbor lists ordered by node id; the lexicographic tie-break walks
  // them in this order.
  void sort_neighbors() {
    auto by_id = [this](const std::pair<int, int64_t>& a, const std::pair<int, int64_t>& b) {
      return ids[a.first] < ids[b.first];
    };
    for (auto& list : adj) std::sort(list.begin(), list.end(), by_id);
    for (auto& list : radj) std::sort(list.begin(), list.end(), by_id);
  }
};

UnionGraph build_union_graph(const std::vector<StationInfo>& stations,
                             const std::vector<const Snapshot*>& snaps) {
  UnionGraph g;
  for (const auto& st : stations) g.add_node(st.id);
  for (const Snapshot* snap : snaps)
    for (const ObsNode& obs : snap->observations) g.add_node(obs.id);
  for (const Snapshot* snap : snaps) {
    for (const GraphEdge& e : snap->edges) {
      int u = g.index.at(e.src);
      int v = g.index.at(e.dst);
      if (e.kind == GraphEdgeKind::kNext) {
        g.add_edge(u, v, std::llround(e.weight * 1000.0));
      } else {
        g.add_edge(u, v, 0);
        g.add_edge(v, u, 0);
      }
    }
  }
  g.sort_neighbors();
  return g;
}

std::vector<int64_t> dijkstra(const std::vector<std::vector<std::pair<int, int64_t>>>& adj,
                              int src) {
  std::vector<int64_t> dist(adj.size(), kInfCost);
  using Item = std::pair<int64_t, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  dist[static_cast<size_t>(src)] = 0;
  heap.emplace(0, src);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d != dist[static_cast<size_t>(u)]) continue;
    for (const auto& [v, w] : adj[static_cast<size_t>(u)]) {
      int64_t nd = d + w;
      if (nd < dist[static_cast<size_t>(v)]) {
        dist[static_cast<size_t>(v)] = nd;
        heap.emplace(nd, v);
      }
    }
  }
  return dist;
}

// Depth-first search over tight edges (prefix cost + edge + optimal suffix
// == total), visiting neighbors in id order: the first complete simple path
// found is the lexicographically smallest minimum-cost path.
bool lex_min_path(const UnionGraph& g, int src, int dst, int64_t total,
                  const std::vector<int64_t>& dist_rev, std::vector<int>& out) {
  std::vector<char> visited(g.ids.size(), 0);
  std::vector<int> path;

  struct Frame {
    int node;
    int64_t cost;
    size_t next_edge = 0;
  };
  std::vector<Frame> stack;
  stack.push_back(Frame{src, 0});
  visited[static_cast<size_t>(src)] = 1;
  path.push_back(src);

  while (!stack.empty()) {
    Frame& frame = stack.back();
    if (frame.node == dst && frame.cost == total) {
      out = path;
      return true;
    }
    bool descended = false;
    const auto& edges = g.adj[static_cast<size_t>(frame.node)];
    while (frame.next_edge < edges.size()) {
      const auto& [v, w] = edges[frame.next_edge++];
      if (visited[static_cast<size_t>(v)]) continue;
      int64_t cost = frame.cost + w;
      if (dist_rev[static_cast<size_t>(v)] >= kInfCost) continue;
      if (cost + dist_rev[static_cast<size_t>(v)] != total) continue;
      visited[static_cast<size_t>(v)] = 1;
      path.push_back(v);
      stack.push_back(Frame{v, cost});
      descended = true;
      break;
    }
    if (!descended) {
      visited[static_cast<size_t>(stack.back().node)] = 0;
      path.pop_back();
      stack.pop_back();
    }
  }
  return false;
}

}  // namespace

QueryResult GraphStore::shortest_path(const HourBucket& from, const HourBucket& to,
                                      const std::string& from_station,
                                      const std::string& to_station) const {
  if (find_station(from_station) == nullptr)
    throw QueryError("unknown station: " + from_station);
  if (find_station(to_station) == nullptr) throw QueryError("unknown station: " + to_station);

  QueryResult result;
  result.kind = "shortest_path";
  result.from = from;
  result.to = to;
  auto snaps = resolve_range(from, to);
  for (const Snapshot* s : snaps) result.snapshot_ids.push_back(s->batch_id);

  UnionGraph g = build_union_graph(stations_, snaps);
  int src = g.index.at(from_station);
  int dst = g.index.at(to_station);

  auto dist = dijkstra(g.adj, src);
  if (dist[static_cast<size_t>(dst)] >= kInfCost) {
    result.path_found = false;
    return result;
  }
  int64_t total = dist[static_cast<size_t>(dst)];
  auto dist_rev = dijkstra(g.radj, dst);

  std::vector<int> path_idx;
  if (!lex_min_path(g, src, dst, total, dist_rev, path_idx)) {
    // Tight-edge DFS always finds a path when Dijkstra did.
    throw QueryError("internal: path reconstruction failed");
  }
  result.path_found = true;
  result.cost_s = static_cast<double>(total) / 1000.0;
  result.path.reserve(path_idx.size());
  for (int idx : path_idx) result.path.push_back(g.ids[static_cast<size_t>(idx)]);
  return result;
}

QueryResult GraphStore::degree(const HourBucket& from, const HourBucket& to,
                               const std::string& station) const {
  if (find_station(station) == nullptr) throw QueryError("unknown station: " + station);

  QueryResult result;
  result.kind = "degree";
  result.from = from;
  result.to = to;
  QueryResult::DegreeEntry entry;
  entry.station = station;

  for (const Snapshot* snap : resolve_range(from, to)) {
    result.snapshot_ids.push_back(snap->batch_id);
    std::unordered_map<std::string, NodeRole> roles;
    roles.reserve(snap->observations.size());
    for (const ObsNode& obs : snap->observations) roles.emplace(obs.id, obs.role);
    for (const GraphEdge& e : snap->edges) {
      if (e.kind != GraphEdgeKind::kAt || e.dst != station) continue;
      auto it = roles.find(e.src);
      if (it != roles.end() && it->second == NodeRole::kStop)
        ++entry.stop_degree;
      else
        ++entry.move_degree;
    }
  }
  entry.total = entry.stop_degree + entry.move_degree;
  result.degrees.push_back(std::move(entry));
  return result;
}

StationGraph GraphStore::derive_station_graph(const HourBucket& from, const HourBucket& to) const {
  auto snaps = resolve_range(from, to);

  // A station visit is a stopover: a stop-labeled observation AT the
  // station (nearest AT-linked station, ties to the smaller id). Buses
  // merely passing by do not visit. Consecutive same-station visits (a
  // dwell run) collapse into one.
  struct Visit {
    int64_t ts_ms;
    std::string station;
  };
  std::map<std::string, std::vector<Visit>> visits_by_vehicle;
  std::set<std::string> present;

  for (const Snapshot* snap : snaps) {
    std::unordered_map<std::string, const ObsNode*> obs_by_id;
    obs_by_id.reserve(snap->observations.size());
    for (const ObsNode& obs : snap->observations) obs_by_id.emplace(obs.id, &obs);

    std::unordered_map<std::string, std::pair<double, std::string>> nearest;
    for (const GraphEdge& e : snap->edges) {
      if (e.kind != GraphEdgeKind::kAt) continue;
      const ObsNode* obs = obs_by_id.at(e.src);
      if (obs->role != NodeRole::kStop) continue;
      const StationInfo* st = find_station(e.dst);
      double dist = geo_distance_m(obs->lat, obs->lon, st->lat, st->lon);
      auto it = nearest.find(e.src);
      if (it == nearest.end() || dist < it->second.first ||
          (dist == it->second.first && e.dst < it->second.second)) {
        nearest[e.src] = {dist, e.dst};
      }
    }
    for (const ObsNode& obs : snap->observations) {
      auto it = nearest.find(obs.id);
      if (it == nearest.end()) continue;
      visits_by_vehicle[obs.vehicle_id].push_back(Visit{obs.ts_ms, it->second.second});
      present.insert(it->second.second);
    }
  }

  StationGraph graph;
  graph.stations.assign(present.begin(), present.end());

  for (auto& [vehicle, visits] : visits_by_vehicle) {
    std::sort(visits.begin(), visits.end(),
              [](const Visit& a, const Visit& b) { return a.ts_ms < b.ts_ms; });
    const std::string* prev = nullptr;
    for (const Visit& v : visits) {
      if (prev != nullptr && *prev != v.station) {
        int u = graph.index_of(*prev);
        int w = graph.index_of(v.station);
        graph.edges[{u, w}] += 1.0;
      }
      if (prev == nullptr || *prev != v.station) prev = &v.station;
    }
  }
  return graph;
}

QueryResult GraphStore::pagerank(const HourBucket& from, const HourBucket& to,
                                 const PageRankParams& params) const {
  QueryResult result;
  result.kind = "pagerank";
  result.from = from;
  result.to = to;
  auto snaps = resolve_range(from, to);
  for (const Snapshot* s : snaps) result.snapshot_ids.push_back(s->batch_id);
  if (snaps.empty()) return result;  // empty result, not an error

  StationGraph graph = derive_station_graph(from, to);
  PageRankResult pr = pagerank_scores(graph, params);
  result.iterations = pr.iterations;
  result.scores = std::move(pr.scores);
  // Busiest first; ties broken by id for stable output.
  std::stable_sort(result.scores.begin(), result.scores.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second != b.second) return a.second > b.second;
                     return a.first < b.first;
                   });
  return result;
}

// --- export / import ---------------------------------------------------------------

void GraphStore::export_graph(const HourBucket& from, const HourBucket& to, ExportFormat format,
                              const std::string& out_dir) const {
  auto snaps = resolve_range(from, to);
  fs::create_directories(out_dir);

  if (format == ExportFormat::kEdgeList) {
    std::ofstream nodes(out_dir + "/nodes.csv", std::ios::trunc);
    std::ofstream edges(out_dir + "/edges.csv", std::ios::trunc);
    if (!nodes || !edges) throw std::runtime_error("cannot write export files in " + out_dir);
    nodes << "id,role,lat,lon,vehicle_id,ts\n";
    edges << "src,dst,kind,weight\n";
    if (!snaps.empty()) {
      for (const StationInfo& st : stations_)
        nodes << st.id << ",station," << format_double(st.lat) << "," << format_double(st.lon)
              << ",,\n";
    }
    for (const Snapshot* snap : snaps) {
      for (const ObsNode& obs : snap->observations)
        nodes << obs.id << "," << to_string(obs.role) << "," << format_double(obs.lat) << ","
              << format_double(obs.lon) << "," << obs.vehicle_id << "," << obs.ts_ms << "\n";
      for (const GraphEdge& e : snap->edges)
        edges << e.src << "," << e.dst << "," << to_string(e.kind) << ","
              << format_double(e.weight) << "\n";
    }
    return;
  }
  if (format == ExportFormat::kDot) {
    std::ofstream dot(out_dir + "/graph.dot", std::ios::trunc);
    if (!dot) throw std::runtime_error("cannot write export files in " + out_dir);
    dot << "digraph fogpipe {\n";
    if (!snaps.empty()) {
      for (const StationInfo& st : stations_)
        dot << "  \"" << st.id << "\" [role=station];\n";
    }
    for (const Snapshot* snap : snaps)
      for (const ObsNode& obs : snap->observations)
        dot << "  \"" << obs.id << "\" [role=" << to_string(obs.role) << "];\n";
    for (const Snapshot* snap : snaps)
      for (const GraphEdge& e : snap->edges) {
        dot << "  \"" << e.src << "\" -> \"" << e.dst << "\" [kind=" << to_string(e.kind)
            << " weight=" << format_double(e.weight);
        if (e.kind == GraphEdgeKind::kAt) dot << " dir=none";
        dot << "];\n";
      }
    dot << "}\n";
    return;
  }
  throw QueryError("unknown export format");
}

ExportedGraph import_edge_list(const std::string& nodes_csv_path,
                               const std::string& edges_csv_path) {
  ExportedGraph graph;
  std::ifstream nodes(nodes_csv_path);
  if (!nodes) throw std::runtime_error("cannot open " + nodes_csv_path);
  std::string line;
  bool header = true;
  while (std::getline(nodes, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::istringstream ss(line);
    ExportedGraph::Node node;
    std::string lat_s, lon_s, ts_s;
    if (!std::getline(ss, node.id, ',') || !std::getline(ss, node.role, ',') ||
        !std::getline(ss, lat_s, ',') || !std::getline(ss, lon_s, ','))
      throw std::runtime_error("malformed node row: " + line);
    std::getline(ss, node.vehicle_id, ',');
    std::getline(ss, ts_s);
    node.lat = std::stod(lat_s);
    node.lon = std::stod(lon_s);
    if (!ts_s.empty()) node.ts_ms = std::stoll(ts_s);
    graph.nodes.push_back(std::move(node));
  }

  std::ifstream edges(edges_csv_path);
  if (!edges) throw std::runtime_error("cannot open " + edges_csv_path);
  header = true;
  while (std::getline(edges, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::istringstream ss(line);
    GraphEdge e;
    std::string kind_s, weight_s;
    if (!std::getline(ss, e.src, ',') || !std::getline(ss, e.dst, ',') ||
        !std::getline(ss, kind_s, ',') || !std::getline(ss, weight_s))
      throw std::runtime_error("malformed edge row: " + line);
    if (kind_s == "NEXT")
      e.kind = GraphEdgeKind::kNext;
    else if (kind_s == "AT")
      e.kind = GraphEdgeKind::kAt;
    else
      throw std::runtime_error("unknown edge kind: " + kind_s);
    e.weight = std::stod(weight_s);
    graph.edges.push_back(std::move(e));
  }
  return graph;
}

// --- persistence --------------------------------------------------------------------

namespace {

std::string two_digits(int v) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%02d", v);
  return buf;
}

}  // namespace

void GraphStore::attach_dir(const std::string& snapshot_dir) {
  snapshot_dir_ = snapshot_dir;
  fs::create_directories(snapshot_dir_);
}

void GraphStore::persist(const fabric::Batch& batch, const Snapshot& snapshot) const {
  fs::path dir = fs::path(snapshot_dir_) / std::to_string(snapshot.hour.year) /
                 two_digits(snapshot.hour.month) / two_digits(snapshot.hour.day) /
                 two_digits(snapshot.hour.hour);
  fs::create_directories(dir);

  std::ofstream batch_out(dir / "batch.txt", std::ios::trunc);
  std::ofstream edges_out(dir / "edges.csv", std::ios::trunc);
  if (!batch_out || !edges_out)
    throw std::runtime_error("cannot write snapshot files under " + dir.string());

  batch_out << fabric::serialize_batch(batch);
  edges_out << "src,dst,kind,weight\n";
  for (const GraphEdge& e : snapshot.edges)
    edges_out << e.src << "," << e.dst << "," << to_string(e.kind) << "," << format_double(e.weight)
              << "\n";
  if (!batch_out || !edges_out)
    throw std::runtime_error("snapshot write failed under " + dir.string());
}

GraphStore GraphStore::load(const std::string& snapshot_dir, std::vector<StationInfo> stations,
                            const StoreConfig& cfg) {
  GraphStore store(std::move(stations), cfg);
  fs::path root(snapshot_dir);
  if (!fs::exists(root)) throw std::runtime_error("snapshot directory not found: " + snapshot_dir);

  std::vector<fs::path> batch_files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename() == "batch.txt")
      batch_files.push_back(entry.path());
  }
  std::sort(batch_files.begin(), batch_files.end());

  for (const auto& path : batch_files) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    fabric::Batch batch;
    std::string err;
    if (!fabric::parse_batch(in, batch, err))
      throw std::runtime_error("corrupt batch file " + path.string() + ": " + err);
    store.ingest_batch(batch);
  }
  store.snapshot_dir_ = snapshot_dir;
  return store;
}

}  // namespace fogpipe::cloud
