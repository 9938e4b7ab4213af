#include "fogpipe/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>
#include <vector>

#include "fogpipe/bounded_queue.hpp"
#include "fogpipe/edge.hpp"
#include "fogpipe/fabric.hpp"
#include "fogpipe/feed.hpp"
#include "fogpipe/feedgen.hpp"
#include "fogpipe/graph_cloud.hpp"

namespace fogpipe {

namespace fs = std::filesystem;

namespace {

constexpr size_t kQueueCapacity = 1024;

struct EdgeResult {
  edge::CleaningReport report;
};

std::string edge_node_name(size_t index) { return "edge" + std::to_string(index); }

}  // namespace

size_t shard_for_vehicle(std::string_view vehicle_id, size_t shards) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : vehicle_id) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return static_cast<size_t>(h % shards);
}

std::string RunSummary::to_line() const {
  std::ostringstream out;
  out << "in=" << tuples_in << " out=" << clean_out << " rejected=" << rejected()
      << " malformed=" << malformed << " late_drops=" << late_drops << " batches=" << batches
      << " snapshots=" << snapshots;
  return out.str();
}

RunSummary run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  if (!fs::exists(cfg.feed_path)) throw std::runtime_error("feed file not found: " + cfg.feed_path);
  if (!fs::exists(cfg.network_path))
    throw std::runtime_error("network file not found: " + cfg.network_path);

  gen::Network network = gen::load_network(cfg.network_path);

  edge::CleaningConfig cleaning;
  cleaning.expected_cadence_s = cfg.cadence_s;
  cleaning.gap_factor = cfg.gap_factor;
  cleaning.session_min_ms = cfg.session_min_ms;
  cleaning.session_max_ms = cfg.session_max_ms;
  for (const auto& route : network.routes) cleaning.known_routes[route.id] = route.number;
  cleaning.validate();

  std::vector<cloud::StationInfo> stations;
  stations.reserve(network.stations.size());
  for (const auto& st : network.stations)
    stations.push_back(cloud::StationInfo{st.id, st.lat, st.lon});

  const size_t n_edges = static_cast<size_t>(cfg.edge_nodes);
  fs::create_directories(fs::path(cfg.out_dir) / "reports");

  // Stage handoffs: dispatcher -> N edge queues -> N clean queues -> fabric
  // -> batch queue -> cloud. Everything is bounded, so a slow stage
  // backpressures its producers.
  std::vector<std::unique_ptr<BoundedQueue<std::string>>> edge_in;
  std::vector<std::unique_ptr<BoundedQueue<CleanTuple>>> edge_out;
  for (size_t i = 0; i < n_edges; ++i) {
    edge_in.push_back(std::make_unique<BoundedQueue<std::string>>(kQueueCapacity));
    edge_out.push_back(std::make_unique<BoundedQueue<CleanTuple>>(kQueueCapacity));
  }
  BoundedQueue<fabric::Batch> batch_queue(64);

  uint64_t feed_lines = 0;
  std::exception_ptr dispatcher_error;
  std::thread dispatcher([&] {
    try {
      std::ifstream in(cfg.feed_path);
      if (!in) throw std::runtime_error("cannot open feed file: " + cfg.feed_path);
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        ++feed_lines;
        // Shard on the vehicle_id column; a line too short to carry one
        // goes to shard 0 and is counted malformed there.
        size_t shard = 0;
        size_t first = line.find(',');
        if (first != std::string::npos) {
          size_t second = line.find(',', first + 1);
          if (second != std::string::npos) {
            size_t third = line.find(',', second + 1);
            std::string_view vehicle(line.data() + second + 1,
                                     (third == std::string::npos ? line.size() : third) -
                                         second - 1);
            shard = shard_for_vehicle(vehicle, n_edges);
          }
        }
        edge_in[shard]->push(line);
      }
    } catch (...) {
      dispatcher_error = std::current_exception();
    }
    for (auto& q : edge_in) q->close();
  });

  std::vector<EdgeResult> edge_results(n_edges);
  std::vector<std::exception_ptr> edge_errors(n_edges);
  std::vector<std::thread> edge_threads;
  for (size_t i = 0; i < n_edges; ++i) {
    edge_threads.emplace_back([&, i] {
      try {
        edge::EdgeNode node(edge_node_name(i), cleaning);
        std::string line;
        while (edge_in[i]->pop(line)) {
          auto outcome = node.process_line(line);
          if (outcome.clean) edge_out[i]->push(std::move(*outcome.clean));
        }
        edge_results[i].report = node.finish();
      } catch (...) {
        edge_errors[i] = std::current_exception();
      }
      edge_out[i]->close();
    });
  }

  fabric::FabricConfig fabric_cfg;
  fabric_cfg.lateness_bound_s = cfg.lateness_bound_s;
  fabric_cfg.stop_threshold_m = cfg.stop_threshold_m;
  fabric::Fabric fab(fabric_cfg);
  for (size_t i = 0; i < n_edges; ++i) fab.register_source(edge_node_name(i));

  std::exception_ptr fabric_error;
  std::thread fabric_thread([&] {
    try {
      // Deterministic round-robin merge: sources are polled in a fixed
      // rotation, so the arrival interleaving (and with it every watermark
      // decision) is reproducible run to run.
      std::vector<size_t> active;
      for (size_t i = 0; i < n_edges; ++i) active.push_back(i);
      size_t turn = 0;
      auto forward = [&](fabric::FabricEvents events) {
        for (auto& batch : events.closed_batches) batch_queue.push(std::move(batch));
      };
      while (!active.empty()) {
        if (turn >= active.size()) turn = 0;
        size_t source = active[turn];
        CleanTuple tuple;
        if (edge_out[source]->pop(tuple)) {
          forward(fab.push(edge_node_name(source), std::move(tuple)));
          ++turn;
        } else {
          forward(fab.finish_source(edge_node_name(source)));
          active.erase(active.begin() + static_cast<ptrdiff_t>(turn));
        }
      }
      forward(fab.finish());
    } catch (...) {
      fabric_error = std::current_exception();
    }
    batch_queue.close();
  });

  cloud::StoreConfig store_cfg;
  store_cfg.station_radius_m = cfg.station_radius_m;
  cloud::GraphStore store(std::move(stations), store_cfg);
  store.attach_dir((fs::path(cfg.out_dir) / "snapshots").string());

  uint64_t batches = 0;
  std::exception_ptr cloud_error;
  std::thread cloud_thread([&] {
    try {
      fabric::Batch batch;
      while (batch_queue.pop(batch)) {
        ++batches;
        store.ingest_batch(batch);
      }
    } catch (...) {
      cloud_error = std::current_exception();
    }
  });

  dispatcher.join();
  for (auto& t : edge_threads) t.join();
  fabric_thread.join();
  cloud_thread.join();

  if (dispatcher_error) std::rethrow_exception(dispatcher_error);
  for (auto& err : edge_errors)
    if (err) std::rethrow_exception(err);
  if (fabric_error) std::rethrow_exception(fabric_error);
  if (cloud_error) std::rethrow_exception(cloud_error);

  RunSummary summary;
  summary.feed_lines = feed_lines;
  for (size_t i = 0; i < n_edges; ++i) {
    const auto& report = edge_results[i].report;
    summary.malformed += report.malformed_lines;
    summary.tuples_in += report.input_count;
    summary.clean_out += report.output_count;
    summary.duplicates_removed += report.duplicates_removed;
    summary.missing_attribute_rejects += report.missing_attribute_rejects;
    summary.wrong_value_rejects += report.wrong_value_rejects;

    std::ofstream out(fs::path(cfg.out_dir) / "reports" / (edge_node_name(i) + ".txt"),
                      std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write edge report");
    out << report.to_text();
  }

  const auto& metrics = fab.metrics();
  summary.late_drops = metrics.late_drops;
  summary.batches = batches;
  summary.snapshots = store.snapshot_count();

  std::ofstream fabric_out(fs::path(cfg.out_dir) / "reports" / "fabric.txt", std::ios::trunc);
  if (!fabric_out) throw std::runtime_error("cannot write fabric report");
  fabric_out << "tuples_in=" << metrics.tuples_in << "\n"
             << "tuples_emitted=" << metrics.tuples_emitted << "\n"
             << "late_drops=" << metrics.late_drops << "\n"
             << "batches_closed=" << metrics.batches_closed << "\n";

  return summary;
}

}  // namespace fogpipe
