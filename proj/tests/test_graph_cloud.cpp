#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fogpipe/feedgen.hpp"
#include "fogpipe/graph_cloud.hpp"
#include "fogpipe/rng.hpp"
#include "oracles.hpp"

using namespace fogpipe;
using namespace fogpipe::cloud;

namespace {

constexpr int64_t kSessionStart = 1465387200000;  // 2016-06-08T12 UTC
const HourBucket kHour12{2016, 6, 8, 12};
const HourBucket kHour13{2016, 6, 8, 13};
const HourBucket kHour14{2016, 6, 8, 14};

std::vector<StationInfo> grid_stations(int count, double spacing_m) {
  std::vector<StationInfo> out;
  for (int i = 0; i < count; ++i) {
    StationInfo st;
    char buf[8];
    std::snprintf(buf, sizeof(buf), "s%04d", i + 1);
    st.id = buf;
    st.lat = 46.0 + i * spacing_m / kMetersPerDegree;
    st.lon = -64.79;
    out.push_back(st);
  }
  return out;
}

ContextTuple obs(const std::string& vehicle, int64_t ts_offset_ms, double lat, double lon,
                 MotionLabel label = MotionLabel::kMove) {
  ContextTuple ctx;
  ctx.tuple.route_id = "r1";
  ctx.tuple.route_number = "1";
  ctx.tuple.vehicle_id = vehicle;
  ctx.tuple.lat = lat;
  ctx.tuple.lon = lon;
  ctx.tuple.ts_ms = kSessionStart + ts_offset_ms;
  ctx.label = label;
  if (label == MotionLabel::kStop) ctx.dist_prev_m = 3.0;
  return ctx;
}

fabric::Batch make_batch(uint64_t id, const HourBucket& hour,
                         std::vector<ContextTuple> tuples) {
  fabric::Batch b;
  b.batch_id = id;
  b.hour = hour;
  b.tuples = std::move(tuples);
  return b;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("ingest builds observation chains with NEXT and AT edges") {
  auto stations = grid_stations(3, 1000.0);
  GraphStore store(stations, StoreConfig{30.0});

  // Four fixes of one vehicle; the first sits 10 m from s0001.
  double lat0 = stations[0].lat + 10.0 / kMetersPerDegree;
  std::vector<ContextTuple> tuples = {
      obs("bus1", 0, lat0, -64.79),
      obs("bus1", 60'000, 46.003, -64.79),
      obs("bus1", 180'000, 46.006, -64.79),
      obs("bus1", 240'000, 46.0061, -64.79, MotionLabel::kStop),
  };
  const Snapshot& snap = store.ingest_batch(make_batch(0, kHour12, tuples));

  CHECK(snap.observations.size() == 4);
  CHECK(snap.next_edge_count() == 3);

  std::vector<double> next_weights;
  for (const auto& e : snap.edges)
    if (e.kind == GraphEdgeKind::kNext) next_weights.push_back(e.weight);
  REQUIRE(next_weights.size() == 3);
  CHECK(next_weights[0] == 60.0);
  CHECK(next_weights[1] == 120.0);
  CHECK(next_weights[2] == 60.0);

  bool found_at = false;
  for (const auto& e : snap.edges)
    if (e.kind == GraphEdgeKind::kAt && e.dst == "s0001") found_at = true;
  CHECK(found_at);
}

TEST_CASE("ingest rejects duplicates, occupied hours, and foreign tuples") {
  GraphStore store(grid_stations(2, 1000.0), StoreConfig{});
  store.ingest_batch(make_batch(0, kHour12, {obs("bus1", 0, 46.0, -64.79)}));

  CHECK_THROWS_AS(store.ingest_batch(make_batch(0, kHour13, {})), IngestError);
  CHECK_THROWS_AS(
      store.ingest_batch(make_batch(1, kHour12, {obs("bus1", 5'000, 46.0, -64.79)})),
      IngestError);
  // Tuple timestamp outside the declared hour.
  CHECK_THROWS_AS(
      store.ingest_batch(make_batch(2, kHour14, {obs("bus1", 10'000, 46.0, -64.79)})),
      IngestError);
}

TEST_CASE("NEXT edge totals match the per-vehicle chain formula on a clean run") {
  gen::NetworkSpec spec;
  spec.routes = 3;
  spec.stations = 9;
  spec.rng_seed = 77;
  gen::Network net = gen::generate_network(spec);
  gen::GroundTruth truth = gen::simulate_trips(net, spec, 600.0, 5.0, kSessionStart);

  std::vector<StationInfo> stations;
  for (const auto& st : net.stations) stations.push_back({st.id, st.lat, st.lon});
  GraphStore store(stations, StoreConfig{});

  std::vector<ContextTuple> tuples;
  std::map<std::string, size_t> per_vehicle;
  for (const auto& traj : truth.trajectories)
    for (const auto& ctx : traj) {
      tuples.push_back(ctx);
      ++per_vehicle[ctx.tuple.vehicle_id];
    }
  const Snapshot& snap = store.ingest_batch(make_batch(0, kHour12, tuples));

  size_t expected = 0;
  for (const auto& [vehicle, count] : per_vehicle) expected += count - 1;
  CHECK(snap.next_edge_count() == expected);
}

TEST_CASE("time tree range resolution is chronological and validated") {
  GraphStore store(grid_stations(2, 1000.0), StoreConfig{});
  store.ingest_batch(make_batch(0, kHour12, {obs("bus1", 0, 46.0, -64.79)}));
  store.ingest_batch(make_batch(1, kHour14, {obs("bus1", 2 * 3600'000, 46.0, -64.79)}));

  auto all = store.resolve_range(kHour12, kHour14);
  REQUIRE(all.size() == 2);
  CHECK(all[0]->hour == kHour12);
  CHECK(all[1]->hour == kHour14);

  CHECK(store.resolve_range(kHour13, kHour13).empty());
  CHECK(store.resolve_range(kHour12, kHour12).size() == 1);
  CHECK(store.resolve_range(kHour13, kHour14).size() == 1);  // only hour 14 exists
  CHECK_THROWS_AS(store.resolve_range(kHour14, kHour12), QueryError);

  const TimeTree& tree = store.time_tree();
  CHECK(tree.years() == std::vector<int>{2016});
  CHECK(tree.months(2016) == std::vector<int>{6});
  CHECK(tree.days(2016, 6) == std::vector<int>{8});
  CHECK(tree.hours(2016, 6, 8) == std::vector<int>{12, 14});
}

TEST_CASE("shortest path follows NEXT chains entered and left via AT edges") {
  auto stations = grid_stations(3, 1000.0);  // s0001, s0002, s0003 one km apart
  GraphStore store(stations, StoreConfig{30.0});

  // bus1 drives s0001 -> s0002 in 60 s, then s0002 -> s0003 in 120 s.
  std::vector<ContextTuple> tuples = {
      obs("bus1", 0, stations[0].lat, stations[0].lon),
      obs("bus1", 60'000, stations[1].lat, stations[1].lon),
      obs("bus1", 180'000, stations[2].lat, stations[2].lon),
  };
  store.ingest_batch(make_batch(0, kHour12, tuples));

  QueryResult r = store.shortest_path(kHour12, kHour12, "s0001", "s0003");
  REQUIRE(r.path_found);
  CHECK(r.cost_s == 180.0);
  REQUIRE(r.path.size() >= 2);
  CHECK(r.path.front() == "s0001");
  CHECK(r.path.back() == "s0003");

  QueryResult same = store.shortest_path(kHour12, kHour12, "s0002", "s0002");
  REQUIRE(same.path_found);
  CHECK(same.cost_s == 0.0);

  QueryResult back = store.shortest_path(kHour12, kHour12, "s0003", "s0001");
  CHECK_FALSE(back.path_found);  // NEXT edges are directed

  CHECK_THROWS_AS(store.shortest_path(kHour12, kHour12, "sXXXX", "s0001"), QueryError);
}

TEST_CASE("shortest path prefers the lexicographically smallest tie") {
  auto stations = grid_stations(4, 1000.0);
  GraphStore store(stations, StoreConfig{30.0});

  // Two equal-cost chains between s0001 and s0004, one via busA, one via
  // busB. Chain node ids differ only by vehicle name.
  std::vector<ContextTuple> tuples = {
      obs("busA", 0, stations[0].lat, stations[0].lon),
      obs("busA", 60'000, stations[3].lat, stations[3].lon),
      obs("busB", 1'000, stations[0].lat, stations[0].lon),
      obs("busB", 61'000, stations[3].lat, stations[3].lon),
  };
  store.ingest_batch(make_batch(0, kHour12, tuples));

  QueryResult r = store.shortest_path(kHour12, kHour12, "s0001", "s0004");
  REQUIRE(r.path_found);
  CHECK(r.cost_s == 60.0);
  bool via_a = false;
  for (const auto& node : r.path)
    if (node.find("busA") != std::string::npos) via_a = true;
  CHECK(via_a);  // "o:busA:..." sorts before "o:busB:..."
}

TEST_CASE("shortest path cost equals exhaustive enumeration on small snapshots") {
  Rng rng(4242);
  int checked = 0;
  for (int round = 0; round < 60; ++round) {
    auto stations = grid_stations(3, 120.0);
    GraphStore store(stations, StoreConfig{60.0});

    int vehicles = 1 + static_cast<int>(rng.next_int(0, 1));
    std::vector<ContextTuple> tuples;
    int total_obs = 0;
    for (int v = 0; v < vehicles && total_obs < 8; ++v) {
      int count = 1 + static_cast<int>(rng.next_int(0, 3));
      int64_t ts = v * 7'000;
      for (int i = 0; i < count && total_obs < 8; ++i) {
        double lat = 46.0 + rng.next_double() * 360.0 / kMetersPerDegree;
        tuples.push_back(obs("bus" + std::to_string(v + 1), ts, lat, -64.79));
        ts += 1'000 + rng.next_int(0, 60'000);
        ++total_obs;
      }
    }
    store.ingest_batch(make_batch(0, kHour12, tuples));

    auto snaps = store.resolve_range(kHour12, kHour12);
    std::string from = "s000" + std::to_string(1 + rng.next_int(0, 2));
    std::string to = "s000" + std::to_string(1 + rng.next_int(0, 2));

    int64_t expected = oracle::brute_force_shortest_ms(stations, snaps, from, to);
    QueryResult r = store.shortest_path(kHour12, kHour12, from, to);
    if (expected < 0) {
      CHECK_FALSE(r.path_found);
    } else {
      REQUIRE(r.path_found);
      CHECK(std::llround(r.cost_s * 1000.0) == expected);
      ++checked;
    }
  }
  CHECK(checked > 20);  // the random geometry must actually connect sometimes
}

TEST_CASE("degree splits AT edges by observation role") {
  auto stations = grid_stations(2, 1000.0);
  GraphStore store(stations, StoreConfig{30.0});

  double near = stations[0].lat + 5.0 / kMetersPerDegree;
  std::vector<ContextTuple> tuples = {
      obs("bus1", 0, near, -64.79, MotionLabel::kStop),
      obs("bus1", 5'000, near, -64.79, MotionLabel::kStop),
      obs("bus1", 10'000, near, -64.79, MotionLabel::kStop),
      obs("bus1", 15'000, near, -64.79, MotionLabel::kMove),
  };
  store.ingest_batch(make_batch(0, kHour12, tuples));

  QueryResult r = store.degree(kHour12, kHour12, "s0001");
  REQUIRE(r.degrees.size() == 1);
  CHECK(r.degrees[0].stop_degree == 3);
  CHECK(r.degrees[0].move_degree == 1);
  CHECK(r.degrees[0].total == 4);

  QueryResult empty = store.degree(kHour12, kHour12, "s0002");
  CHECK(empty.degrees[0].total == 0);

  CHECK_THROWS_AS(store.degree(kHour12, kHour12, "sXXXX"), QueryError);
}

TEST_CASE("degree over a range equals the sum of per-hour degrees") {
  auto stations = grid_stations(3, 40.0);
  GraphStore store(stations, StoreConfig{60.0});

  Rng rng(11);
  for (int h = 0; h < 3; ++h) {
    std::vector<ContextTuple> tuples;
    int count = 5 + static_cast<int>(rng.next_int(0, 10));
    for (int i = 0; i < count; ++i) {
      double lat = 46.0 + rng.next_double() * 160.0 / kMetersPerDegree;
      tuples.push_back(obs("bus1", h * 3600'000 + i * 5'000, lat, -64.79,
                           rng.chance(0.5) ? MotionLabel::kStop : MotionLabel::kMove));
    }
    HourBucket hour{2016, 6, 8, 12 + h};
    store.ingest_batch(make_batch(static_cast<uint64_t>(h), hour, tuples));
  }

  for (const auto& st : store.stations()) {
    QueryResult full = store.degree(kHour12, kHour14, st.id);
    uint64_t stop_sum = 0, move_sum = 0, total_sum = 0;
    for (int h = 0; h < 3; ++h) {
      HourBucket hour{2016, 6, 8, 12 + h};
      QueryResult part = store.degree(hour, hour, st.id);
      stop_sum += part.degrees[0].stop_degree;
      move_sum += part.degrees[0].move_degree;
      total_sum += part.degrees[0].total;
    }
    CHECK(full.degrees[0].stop_degree == stop_sum);
    CHECK(full.degrees[0].move_degree == move_sum);
    CHECK(full.degrees[0].total == total_sum);
  }
}

TEST_CASE("station graph counts transitions between consecutive distinct stopovers") {
  auto stations = grid_stations(3, 1000.0);
  GraphStore store(stations, StoreConfig{30.0});

  // Stopovers: s0001 (a 2-tick dwell run, collapses), s0002, s0003, s0001;
  // the move observation passing s0002 is not a visit.
  std::vector<ContextTuple> tuples = {
      obs("bus1", 0, stations[0].lat, stations[0].lon, MotionLabel::kStop),
      obs("bus1", 5'000, stations[0].lat, stations[0].lon, MotionLabel::kStop),
      obs("bus1", 60'000, stations[1].lat, stations[1].lon, MotionLabel::kStop),
      obs("bus1", 90'000, stations[1].lat, stations[1].lon),  // passing, not a visit
      obs("bus1", 120'000, stations[2].lat, stations[2].lon, MotionLabel::kStop),
      obs("bus1", 180'000, stations[0].lat, stations[0].lon, MotionLabel::kStop),
  };
  store.ingest_batch(make_batch(0, kHour12, tuples));

  StationGraph g = store.derive_station_graph(kHour12, kHour12);
  REQUIRE(g.stations.size() == 3);
  CHECK(g.edges.size() == 3);
  CHECK(g.edges.at({g.index_of("s0001"), g.index_of("s0002")}) == 1.0);
  CHECK(g.edges.at({g.index_of("s0002"), g.index_of("s0003")}) == 1.0);
  CHECK(g.edges.at({g.index_of("s0003"), g.index_of("s0001")}) == 1.0);
}

TEST_CASE("pagerank: symmetric pair splits evenly, singleton gets everything") {
  StationGraph pair;
  pair.stations = {"a", "b"};
  pair.edges[{0, 1}] = 2.0;
  pair.edges[{1, 0}] = 2.0;
  PageRankResult r = pagerank_scores(pair, PageRankParams{});
  REQUIRE(r.scores.size() == 2);
  CHECK(r.scores[0].second == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.scores[1].second == doctest::Approx(0.5).epsilon(1e-12));

  StationGraph single;
  single.stations = {"a"};
  PageRankResult s = pagerank_scores(single, PageRankParams{});
  REQUIRE(s.scores.size() == 1);
  CHECK(s.scores[0].second == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pagerank matches the dense oracle and normalizes") {
  Rng rng(777);
  for (int round = 0; round < 50; ++round) {
    StationGraph g;
    int n = 2 + static_cast<int>(rng.next_int(0, 8));
    for (int i = 0; i < n; ++i) g.stations.push_back("s" + std::to_string(100 + i));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        if (rng.chance(0.3)) g.edges[{i, j}] = 1.0 + rng.next_int(0, 9);
      }

    PageRankResult r = pagerank_scores(g, PageRankParams{0.85, 1e-12, 500});
    auto expected = oracle::dense_pagerank(g, 0.85, 2000);
    REQUIRE(r.scores.size() == expected.size());
    double sum = 0.0;
    for (size_t i = 0; i < expected.size(); ++i) {
      CHECK(r.scores[i].second == doctest::Approx(expected[i]).epsilon(1e-6));
      sum += r.scores[i].second;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("pagerank over an empty range is an empty result, not an error") {
  GraphStore store(grid_stations(2, 1000.0), StoreConfig{});
  QueryResult r = store.pagerank(kHour12, kHour14);
  CHECK(r.scores.empty());
  CHECK(r.snapshot_ids.empty());
}

TEST_CASE("repeated queries return identical results") {
  auto stations = grid_stations(3, 60.0);
  GraphStore store(stations, StoreConfig{60.0});
  Rng rng(5);
  std::vector<ContextTuple> tuples;
  for (int i = 0; i < 40; ++i) {
    double lat = 46.0 + rng.next_double() * 140.0 / kMetersPerDegree;
    tuples.push_back(obs("bus" + std::to_string(1 + (i % 3)), i * 5'000, lat, -64.79,
                         i % 2 == 0 ? MotionLabel::kStop : MotionLabel::kMove));
  }
  store.ingest_batch(make_batch(0, kHour12, tuples));

  CHECK(store.pagerank(kHour12, kHour12).to_machine() ==
        store.pagerank(kHour12, kHour12).to_machine());
  CHECK(store.shortest_path(kHour12, kHour12, "s0001", "s0003").to_machine() ==
        store.shortest_path(kHour12, kHour12, "s0001", "s0003").to_machine());
  CHECK(store.degree(kHour12, kHour12, "s0002").to_machine() ==
        store.degree(kHour12, kHour12, "s0002").to_machine());
}

TEST_CASE("edge-list export round trips and empty ranges keep headers") {
  TempDir dir("fogpipe_export_test");
  auto stations = grid_stations(2, 100.0);
  GraphStore store(stations, StoreConfig{60.0});

  std::vector<ContextTuple> tuples = {
      obs("bus1", 0, stations[0].lat, stations[0].lon),
      obs("bus1", 5'000, stations[0].lat + 20.0 / kMetersPerDegree, stations[0].lon),
      obs("bus1", 10'000, stations[1].lat, stations[1].lon, MotionLabel::kStop),
      obs("bus1", 15'000, stations[1].lat, stations[1].lon, MotionLabel::kStop),
  };
  const Snapshot& snap = store.ingest_batch(make_batch(0, kHour12, tuples));

  std::string out = (dir.path / "full").string();
  store.export_graph(kHour12, kHour12, ExportFormat::kEdgeList, out);
  ExportedGraph g = import_edge_list(out + "/nodes.csv", out + "/edges.csv");

  CHECK(g.nodes.size() == stations.size() + snap.observations.size());
  REQUIRE(g.edges.size() == snap.edges.size());
  std::multiset<std::string> exported, original;
  for (const auto& e : g.edges)
    exported.insert(e.src + ">" + e.dst + ">" + std::to_string(e.kind == GraphEdgeKind::kAt));
  for (const auto& e : snap.edges)
    original.insert(e.src + ">" + e.dst + ">" + std::to_string(e.kind == GraphEdgeKind::kAt));
  CHECK(exported == original);

  size_t stop_nodes = 0;
  for (const auto& node : g.nodes)
    if (node.role == "stop") ++stop_nodes;
  CHECK(stop_nodes == 2);

  // Empty range: header-only files.
  std::string empty_out = (dir.path / "empty").string();
  store.export_graph(kHour13, kHour13, ExportFormat::kEdgeList, empty_out);
  std::ifstream nodes(empty_out + "/nodes.csv");
  std::string line;
  REQUIRE(std::getline(nodes, line));
  CHECK(line == "id,role,lat,lon,vehicle_id,ts");
  CHECK_FALSE(std::getline(nodes, line));
}

TEST_CASE("DOT export carries role attributes") {
  TempDir dir("fogpipe_dot_test");
  auto stations = grid_stations(1, 100.0);
  GraphStore store(stations, StoreConfig{60.0});
  store.ingest_batch(make_batch(
      0, kHour12,
      {obs("bus1", 0, stations[0].lat, stations[0].lon),
       obs("bus1", 5'000, stations[0].lat, stations[0].lon, MotionLabel::kStop)}));

  std::string out = dir.path.string();
  store.export_graph(kHour12, kHour12, ExportFormat::kDot, out);
  std::ifstream dot(out + "/graph.dot");
  std::stringstream text;
  text << dot.rdbuf();
  std::string content = text.str();
  CHECK(content.find("[role=station]") != std::string::npos);
  CHECK(content.find("[role=stop]") != std::string::npos);
  CHECK(content.find("[role=move]") != std::string::npos);
  CHECK(content.find("kind=NEXT") != std::string::npos);
  CHECK(content.find("kind=AT") != std::string::npos);
}

TEST_CASE("snapshots persist to the hour-keyed layout and load back") {
  TempDir dir("fogpipe_persist_test");
  auto stations = grid_stations(3, 500.0);

  GraphStore store(stations, StoreConfig{30.0});
  store.attach_dir(dir.path.string());

  Rng rng(9);
  for (int h = 0; h < 2; ++h) {
    std::vector<ContextTuple> tuples;
    for (int i = 0; i < 20; ++i) {
      double lat = 46.0 + rng.next_double() * 1000.0 / kMetersPerDegree;
      tuples.push_back(obs("bus" + std::to_string(1 + (i % 2)), h * 3600'000 + i * 5'000, lat,
                           -64.79, rng.chance(0.3) ? MotionLabel::kStop : MotionLabel::kMove));
    }
    store.ingest_batch(make_batch(static_cast<uint64_t>(h), HourBucket{2016, 6, 8, 12 + h},
                                  tuples));
  }

  CHECK(std::filesystem::exists(dir.path / "2016" / "06" / "08" / "12" / "batch.txt"));
  CHECK(std::filesystem::exists(dir.path / "2016" / "06" / "08" / "13" / "edges.csv"));

  GraphStore loaded = GraphStore::load(dir.path.string(), stations, StoreConfig{30.0});
  REQUIRE(loaded.snapshot_count() == 2);

  auto originals = store.resolve_range(kHour12, kHour14);
  auto reloaded = loaded.resolve_range(kHour12, kHour14);
  REQUIRE(originals.size() == reloaded.size());
  for (size_t i = 0; i < originals.size(); ++i) {
    CHECK(originals[i]->batch_id == reloaded[i]->batch_id);
    CHECK(originals[i]->hour == reloaded[i]->hour);
    REQUIRE(originals[i]->observations.size() == reloaded[i]->observations.size());
    REQUIRE(originals[i]->edges.size() == reloaded[i]->edges.size());
    for (size_t j = 0; j < originals[i]->edges.size(); ++j) {
      CHECK(originals[i]->edges[j].src == reloaded[i]->edges[j].src);
      CHECK(originals[i]->edges[j].dst == reloaded[i]->edges[j].dst);
      CHECK(originals[i]->edges[j].weight == reloaded[i]->edges[j].weight);
    }
  }

  // The persisted edge file matches the in-memory snapshot exactly.
  std::ifstream edges(dir.path / "2016" / "06" / "08" / "12" / "edges.csv");
  std::string line;
  REQUIRE(std::getline(edges, line));
  CHECK(line == "src,dst,kind,weight");
  size_t rows = 0;
  while (std::getline(edges, line))
    if (!line.empty()) ++rows;
  CHECK(rows == originals[0]->edges.size());
}
