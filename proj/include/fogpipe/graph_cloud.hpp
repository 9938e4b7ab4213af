#ifndef FOGPIPE_GRAPH_CLOUD_HPP_
#define FOGPIPE_GRAPH_CLOUD_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fogpipe/fabric.hpp"
#include "fogpipe/feed.hpp"
#include "fogpipe/time_bucket.hpp"

namespace fogpipe::cloud {

class QueryError : public std::runtime_error {
 public:
  explicit QueryError(const std::string& what) : std::runtime_error(what) {}
};

class IngestError : public std::runtime_error {
 public:
  explicit IngestError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kDefaultStationRadiusM = 30.0;

struct StationInfo {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
};

enum class NodeRole { kStop, kMove, kStation };

const char* to_string(NodeRole role);

struct ObsNode {
  std::string id;  // "o:<vehicle>:<ts>"
  NodeRole role = NodeRole::kMove;
  std::string vehicle_id;
  int64_t ts_ms = 0;
  double lat = 0.0;
  double lon = 0.0;
};

enum class GraphEdgeKind { kNext, kAt };

struct GraphEdge {
  std::string src;
  std::string dst;
  GraphEdgeKind kind = GraphEdgeKind::kNext;
  double weight = 0.0;  // NEXT: seconds between observations; AT: 0
};

// One hour of trajectory graph: observation nodes in canonical
// (vehicle, ts) order plus NEXT/AT edges. Station nodes live once in the
// store, not per snapshot.
struct Snapshot {
  uint64_t batch_id = 0;
  HourBucket hour;
  std::vector<ObsNode> observations;
  std::vector<GraphEdge> edges;

  size_t next_edge_count() const;
  size_t at_edge_count() const;
};

// Calendar index year -> month -> day -> hour; an hour node exists iff its
// snapshot was ingested.
class TimeTree {
 public:
  // Returns false when the hour is already occupied.
  bool insert(const HourBucket& hour, size_t snapshot_index);

  // Snapshot indices for hours in [from, to], chronological.
  // Throws QueryError when from > to.
  std::vector<size_t> resolve_range(const HourBucket& from, const HourBucket& to) const;

  bool contains(const HourBucket& hour) const;
  size_t size() const { return hours_.size(); }

  std::vector<int> years() const;
  std::vector<int> months(int year) const;
  std::vector<int> days(int year, int month) const;
  std::vector<int> hours(int year, int month, int day) const;

 private:
  std::map<HourBucket, size_t> hours_;
};

// Station-to-station transition graph derived from a snapshot range: edge
// weight = number of observed vehicle transitions between consecutive
// station visits. A visit is a stopover (stop-labeled observation at the
// station); only visited stations appear as nodes.
struct StationGraph {
  std::vector<std::string> stations;           // sorted ids
  std::map<std::pair<int, int>, double> edges;  // (src, dst) index -> weight

  int index_of(const std::string& station) const;
};

struct PageRankParams {
  double damping = 0.85;
  double tol = 1e-8;
  int max_iter = 100;
};

struct PageRankResult {
  std::vector<std::pair<std::string, double>> scores;  // station id -> score
  int iterations = 0;
};

// Power iteration with uniform teleport; dangling stations redistribute
// their rank uniformly. Deterministic.
PageRankResult pagerank_scores(const StationGraph& graph, const PageRankParams& params);

struct QueryResult {
  std::string kind;
  HourBucket from;
  HourBucket to;
  std::vector<uint64_t> snapshot_ids;

  // shortest_path payload
  bool path_found = false;
  std::vector<std::string> path;  // node ids, stations at both ends
  double cost_s = 0.0;

  // degree payload
  struct DegreeEntry {
    std::string station;
    uint64_t stop_degree = 0;
    uint64_t move_degree = 0;
    uint64_t total = 0;
  };
  std::vector<DegreeEntry> degrees;

  // pagerank payload
  std::vector<std::pair<std::string, double>> scores;
  int iterations = 0;

  std::string to_table() const;    // human-readable
  std::string to_machine() const;  // stable key=value lines
};

enum class ExportFormat { kEdgeList, kDot };

struct StoreConfig {
  double station_radius_m = kDefaultStationRadiusM;
};

// The core layer: ingests closed batches into time-tree-indexed snapshots
// and answers queries over hour ranges. Single writer, many readers.
class GraphStore {
 public:
  GraphStore(std::vector<StationInfo> stations, const StoreConfig& cfg = {});

  // Builds the snapshot, registers it at its hour, and persists it when a
  // snapshot directory is attached. Throws IngestError on duplicate batch
  // ids, occupied hours, or tuples outside the batch hour.
  const Snapshot& ingest_batch(const fabric::Batch& batch);

  std::vector<const Snapshot*> resolve_range(const HourBucket& from, const HourBucket& to) const;

  QueryResult shortest_path(const HourBucket& from, const HourBucket& to,
                            const std::string& from_station, const std::string& to_station) const;
  QueryResult degree(const HourBucket& from, const HourBucket& to,
                     const std::string& station) const;
  QueryResult pagerank(const HourBucket& from, const HourBucket& to,
                       const PageRankParams& params = {}) const;

  StationGraph derive_station_graph(const HourBucket& from, const HourBucket& to) const;

  void export_graph(const HourBucket& from, const HourBucket& to, ExportFormat format,
                    const std::string& out_dir) const;

  // Persistence: snapshots/<year>/<month>/<day>/<hour>/{batch.txt,edges.csv}.
  void attach_dir(const std::string& snapshot_dir);
  static GraphStore load(const std::string& snapshot_dir, std::vector<StationInfo> stations,
                         const StoreConfig& cfg = {});

  const TimeTree& time_tree() const { return tree_; }
  const std::vector<StationInfo>& stations() const { return stations_; }
  size_t snapshot_count() const { return snapshots_.size(); }

 private:
  const StationInfo* find_station(const std::string& id) const;
  void persist(const fabric::Batch& batch, const Snapshot& snapshot) const;

  std::vector<StationInfo> stations_;
  std::map<std::string, size_t> station_index_;
  StoreConfig cfg_;
  TimeTree tree_;
  std::vector<Snapshot> snapshots_;
  std::set<uint64_t> ingested_batch_ids_;
  std::string snapshot_dir_;  // empty = in-memory only
};

// Edge-list import, the inverse of the edge-list export; used to verify the
// export round trip and by external tooling.
struct ExportedGraph {
  struct Node {
    std::string id;
    std::string role;
    double lat = 0.0;
    double lon = 0.0;
    std::string vehicle_id;
    std::optional<int64_t> ts_ms;
  };
  std::vector<Node> nodes;
  std::vector<GraphEdge> edges;
};

ExportedGraph import_edge_list(const std::string& nodes_csv_path, const std::string& edges_csv_path);

}  // namespace fogpipe::cloud

#endif  // FOGPIPE_GRAPH_CLOUD_HPP_
