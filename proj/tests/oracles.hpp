// Independent reference implementations used as test oracles. These stay
// deliberately separate from the library code paths they check.
#ifndef FOGPIPE_TESTS_ORACLES_HPP_
#define FOGPIPE_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fogpipe/feed.hpp"
#include "fogpipe/graph_cloud.hpp"

namespace oracle {

// Great-circle distance; the equirectangular path must agree at city scale.
inline double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kEarthRadiusM = 6371000.0;
  constexpr double kDeg = 3.14159265358979323846 / 180.0;
  double phi1 = lat1 * kDeg, phi2 = lat2 * kDeg;
  double dphi = (lat2 - lat1) * kDeg, dlambda = (lon2 - lon1) * kDeg;
  double a = std::sin(dphi / 2) * std::sin(dphi / 2) +
             std::cos(phi1) * std::cos(phi2) * std::sin(dlambda / 2) * std::sin(dlambda / 2);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(a));
}

// Offline stable sort by (vehicle_id, ts).
inline std::vector<fogpipe::CleanTuple> stable_sort_by_vehicle_ts(
    std::vector<fogpipe::CleanTuple> tuples) {
  std::stable_sort(tuples.begin(), tuples.end(),
                   [](const fogpipe::CleanTuple& a, const fogpipe::CleanTuple& b) {
                     if (a.vehicle_id != b.vehicle_id) return a.vehicle_id < b.vehicle_id;
                     return a.ts_ms < b.ts_ms;
                   });
  return tuples;
}

// Stop/move recomputation over a final ordered trajectory, written against
// the rule directly rather than the streaming state machine.
struct LabeledPoint {
  fogpipe::MotionLabel label;
  bool has_dist;
  double dist_m;
};

inline std::vector<LabeledPoint> relabel_trajectory(const std::vector<fogpipe::CleanTuple>& traj,
                                                    double threshold_m) {
  std::vector<LabeledPoint> out;
  for (size_t i = 0; i < traj.size(); ++i) {
    LabeledPoint p{fogpipe::MotionLabel::kMove, false, 0.0};
    if (i > 0) {
      p.dist_m = fogpipe::geo_distance_m(traj[i - 1].lat, traj[i - 1].lon, traj[i].lat,
                                         traj[i].lon);
      p.has_dist = true;
      if (p.dist_m < threshold_m) p.label = fogpipe::MotionLabel::kStop;
    }
    out.push_back(p);
  }
  return out;
}

// Exhaustive minimum-cost simple path over a snapshot range, in integer
// milliseconds: NEXT edges directed, AT edges free in both directions.
// Returns -1 when no path exists.
inline int64_t brute_force_shortest_ms(const std::vector<fogpipe::cloud::StationInfo>& stations,
                                       const std::vector<const fogpipe::cloud::Snapshot*>& snaps,
                                       const std::string& from_station,
                                       const std::string& to_station) {
  std::vector<std::string> ids;
  std::map<std::string, int> index;
  auto intern = [&](const std::string& id) {
    auto it = index.find(id);
    if (it != index.end()) return it->second;
    int i = static_cast<int>(ids.size());
    ids.push_back(id);
    index[id] = i;
    return i;
  };
  for (const auto& st : stations) intern(st.id);
  std::vector<std::vector<std::pair<int, int64_t>>> adj;
  auto edge = [&](int u, int v, int64_t w) {
    if (adj.size() < ids.size()) adj.resize(ids.size());
    adj[static_cast<size_t>(u)].push_back({v, w});
  };
  for (const auto* snap : snaps)
    for (const auto& obs : snap->observations) intern(obs.id);
  adj.resize(ids.size());
  for (const auto* snap : snaps) {
    for (const auto& e : snap->edges) {
      int u = index.at(e.src);
      int v = index.at(e.dst);
      if (e.kind == fogpipe::cloud::GraphEdgeKind::kNext) {
        edge(u, v, std::llround(e.weight * 1000.0));
      } else {
        edge(u, v, 0);
        edge(v, u, 0);
      }
    }
  }

  int src = index.at(from_station);
  int dst = index.at(to_station);
  std::vector<char> visited(ids.size(), 0);
  int64_t best = -1;

  // Plain depth-first enumeration of every simple path.
  auto dfs = [&](auto&& self, int u, int64_t cost) -> void {
    if (u == dst) {
      if (best < 0 || cost < best) best = cost;
      return;
    }
    for (const auto& [v, w] : adj[static_cast<size_t>(u)]) {
      if (visited[static_cast<size_t>(v)]) continue;
      visited[static_cast<size_t>(v)] = 1;
      self(self, v, cost + w);
      visited[static_cast<size_t>(v)] = 0;
    }
  };
  visited[static_cast<size_t>(src)] = 1;
  dfs(dfs, src, 0);
  return best;
}

// Dense power-iteration PageRank with an explicit column-stochastic matrix;
// dangling columns are uniform.
inline std::vector<double> dense_pagerank(const fogpipe::cloud::StationGraph& g, double damping,
                                          int iterations) {
  size_t n = g.stations.size();
  if (n == 0) return {};
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  std::vector<double> out_weight(n, 0.0);
  for (const auto& [key, w] : g.edges) out_weight[static_cast<size_t>(key.first)] += w;
  for (size_t u = 0; u < n; ++u) {
    if (out_weight[u] == 0.0) {
      for (size_t v = 0; v < n; ++v) m[v][u] = 1.0 / static_cast<double>(n);
    }
  }
  for (const auto& [key, w] : g.edges)
    m[static_cast<size_t>(key.second)][static_cast<size_t>(key.first)] = w / out_weight[static_cast<size_t>(key.first)];

  std::vector<double> x(n, 1.0 / static_cast<double>(n)), next(n, 0.0);
  for (int it = 0; it < iterations; ++it) {
    for (size_t v = 0; v < n; ++v) {
      double sum = 0.0;
      for (size_t u = 0; u < n; ++u) sum += m[v][u] * x[u];
      next[v] = (1.0 - damping) / static_cast<double>(n) + damping * sum;
    }
    x.swap(next);
  }
  return x;
}

}  // namespace oracle

#endif  // FOGPIPE_TESTS_ORACLES_HPP_
