// Command-line front end: generate feeds, run the edge->fabric->cloud
// topology, query snapshots, export graphs.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fogpipe/config.hpp"
#include "fogpipe/fabric.hpp"
#include "fogpipe/feed.hpp"
#include "fogpipe/feedgen.hpp"
#include "fogpipe/graph_cloud.hpp"
#include "fogpipe/pipeline.hpp"
#include "fogpipe/time_bucket.hpp"

namespace fs = std::filesystem;
using namespace fogpipe;

namespace {

constexpr const char* kConfigEnvVar = "FOGPIPE_CONFIG";

struct GenerateArgs {
  int routes = 30;
  int stations = 642;
  double duration_s = 3595.0;
  double cadence_s = 5.0;
  double dup_rate = 0.0;
  double drop_rate = 0.0;
  double corrupt_rate = 0.0;
  double lateness_s = 0.0;
  uint64_t seed = 1;
  std::string out_dir = "out";
  int vehicles_per_route = 1;
  double speed_mps = 10.0;
  double headway_s = 600.0;
  double dwell_chance = 0.25;
  int hubs = 3;
  double hub_ratio = 3.0;
  int64_t session_start_ms = 1465387200000;  // 2016-06-08T12 UTC
  int edge_nodes = 4;
};

int cmd_generate(const GenerateArgs& args) {
  gen::NetworkSpec spec;
  spec.routes = args.routes;
  spec.stations = args.stations;
  spec.vehicles_per_route = args.vehicles_per_route;
  spec.speed_mps = args.speed_mps;
  spec.headway_s = args.headway_s;
  spec.dwell_chance = args.dwell_chance;
  spec.hub_count = args.hubs;
  spec.hub_weight_ratio = args.hub_ratio;
  spec.rng_seed = args.seed;

  gen::FaultProfile faults;
  faults.duplicate_rate = args.dup_rate;
  faults.drop_rate = args.drop_rate;
  faults.corrupt_rate = args.corrupt_rate;
  faults.max_lateness_s = args.lateness_s;
  faults.rng_seed = args.seed;
  faults.validate();

  gen::Network network = gen::generate_network(spec);
  gen::GroundTruth truth =
      gen::simulate_trips(network, spec, args.duration_s, args.cadence_s, args.session_start_ms);
  gen::FeedArtifacts artifacts = gen::emit_feed(truth, faults);

  fs::create_directories(args.out_dir);
  fs::path out(args.out_dir);
  write_feed_file((out / "feed.txt").string(), artifacts.feed);
  gen::save_truth((out / "truth.txt").string(), truth);
  gen::save_ledger((out / "ledger.txt").string(), artifacts.ledger);
  gen::save_network((out / "network.txt").string(), network);

  PipelineConfig cfg;
  cfg.feed_path = (out / "feed.txt").string();
  cfg.network_path = (out / "network.txt").string();
  cfg.out_dir = (out / "run").string();
  cfg.edge_nodes = args.edge_nodes;
  cfg.cadence_s = args.cadence_s;
  cfg.session_min_ms = args.session_start_ms;
  cfg.session_max_ms = args.session_start_ms + static_cast<int64_t>(args.duration_s * 1000.0);
  cfg.rng_seed = args.seed;
  cfg.to_file((out / "config.txt").string());

  std::cout << "generated " << artifacts.feed.size() << " feed lines, "
            << truth.tuple_count() << " truth tuples, " << artifacts.ledger.entries.size()
            << " ledger entries under " << args.out_dir << "\n";
  return 0;
}

PipelineConfig load_config_with_env(const std::string& config_path) {
  std::string path = config_path;
  if (path.empty()) {
    const char* env = std::getenv(kConfigEnvVar);
    if (env != nullptr && *env != '\0') path = env;
  }
  if (path.empty()) return PipelineConfig{};
  return PipelineConfig::from_file(path);
}

HourBucket parse_hour_or_throw(const std::string& text) {
  HourBucket bucket;
  std::string err;
  if (!parse_hour_bucket(text, bucket, err)) throw std::runtime_error(err);
  return bucket;
}

cloud::GraphStore load_store(const std::string& snapshot_dir, const std::string& network_path,
                             double station_radius_m) {
  gen::Network network = gen::load_network(network_path);
  std::vector<cloud::StationInfo> stations;
  stations.reserve(network.stations.size());
  for (const auto& st : network.stations)
    stations.push_back(cloud::StationInfo{st.id, st.lat, st.lon});
  cloud::StoreConfig cfg;
  cfg.station_radius_m = station_radius_m;
  return cloud::GraphStore::load(snapshot_dir, std::move(stations), cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edge-to-cloud transit mobility analytics pipeline"};
  app.require_subcommand(1);

  // --- generate ---------------------------------------------------------------
  GenerateArgs gen_args;
  auto* generate = app.add_subcommand("generate", "generate a synthetic feed with ground truth");
  generate->add_option("--routes", gen_args.routes, "number of bus routes");
  generate->add_option("--stations", gen_args.stations, "number of stations");
  generate->add_option("--duration", gen_args.duration_s, "simulated seconds");
  generate->add_option("--cadence", gen_args.cadence_s, "tuple cadence in seconds");
  generate->add_option("--dup", gen_args.dup_rate, "duplicate probability");
  generate->add_option("--drop", gen_args.drop_rate, "drop probability");
  generate->add_option("--corrupt", gen_args.corrupt_rate, "corruption probability");
  generate->add_option("--lateness", gen_args.lateness_s, "max arrival lateness in seconds");
  generate->add_option("--seed", gen_args.seed, "rng seed");
  generate->add_option("--out", gen_args.out_dir, "output directory");
  generate->add_option("--vehicles-per-route", gen_args.vehicles_per_route, "vehicles per route");
  generate->add_option("--speed", gen_args.speed_mps, "vehicle speed in m/s");
  generate->add_option("--headway", gen_args.headway_s, "headway between vehicles in seconds");
  generate->add_option("--dwell-chance", gen_args.dwell_chance, "dwell probability at stations");
  generate->add_option("--hubs", gen_args.hubs, "number of transfer hubs");
  generate->add_option("--hub-ratio", gen_args.hub_ratio, "weight ratio between hub ranks");
  generate->add_option("--session-start", gen_args.session_start_ms, "session start, epoch ms");
  generate->add_option("--edge-nodes", gen_args.edge_nodes, "edge node count for config.txt");

  // --- run --------------------------------------------------------------------
  std::string run_config_path;
  std::string run_feed, run_network, run_out;
  int run_edge_nodes = -1;
  double run_lateness = -1.0, run_stop_threshold = -1.0, run_station_radius = -1.0;
  double run_cadence = -1.0, run_gap_factor = -1.0;
  int64_t run_session_min = -1, run_session_max = -1;
  auto* run = app.add_subcommand("run", "run the edge->fabric->cloud pipeline over a feed");
  run->add_option("--config", run_config_path,
                  "config file (default: $" + std::string(kConfigEnvVar) + ")");
  run->add_option("--feed", run_feed, "feed file (overrides config)");
  run->add_option("--network", run_network, "network file (overrides config)");
  run->add_option("--out", run_out, "output directory (overrides config)");
  run->add_option("--edge-nodes", run_edge_nodes, "simulated edge node count");
  run->add_option("--lateness-bound", run_lateness, "fabric lateness bound in seconds");
  run->add_option("--stop-threshold", run_stop_threshold, "stop/move threshold in meters");
  run->add_option("--station-radius", run_station_radius, "station AT-edge radius in meters");
  run->add_option("--cadence", run_cadence, "expected cadence in seconds");
  run->add_option("--gap-factor", run_gap_factor, "gap detection factor");
  run->add_option("--session-min", run_session_min, "session window start, epoch ms");
  run->add_option("--session-max", run_session_max, "session window end, epoch ms");

  // --- query ------------------------------------------------------------------
  std::string q_snapshots, q_network, q_from, q_to;
  double q_station_radius = cloud::kDefaultStationRadiusM;
  bool q_machine = false;
  auto* query = app.add_subcommand("query", "query the snapshot store");
  query->require_subcommand(1);

  std::string sp_from_station, sp_to_station;
  auto* q_sp = query->add_subcommand("shortest-path", "minimum-travel-time path between stations");
  std::string deg_station;
  auto* q_deg = query->add_subcommand("degree", "AT-edge degree of a station");
  cloud::PageRankParams pr_params;
  auto* q_pr = query->add_subcommand("pagerank", "station PageRank over the range");

  for (auto* sub : {q_sp, q_deg, q_pr}) {
    sub->add_option("--snapshots", q_snapshots, "snapshot directory")->required();
    sub->add_option("--network", q_network, "network file")->required();
    sub->add_option("--from", q_from, "range start hour, YYYY-MM-DDTHH")->required();
    sub->add_option("--to", q_to, "range end hour, YYYY-MM-DDTHH")->required();
    sub->add_option("--station-radius", q_station_radius, "AT-edge radius used at ingest");
    sub->add_flag("--machine", q_machine, "machine-readable key=value output");
  }
  q_sp->add_option("--from-station", sp_from_station, "origin station id")->required();
  q_sp->add_option("--to-station", sp_to_station, "destination station id")->required();
  q_deg->add_option("--station", deg_station, "station id")->required();
  q_pr->add_option("--damping", pr_params.damping, "damping factor");
  q_pr->add_option("--tol", pr_params.tol, "L1 convergence tolerance");
  q_pr->add_option("--max-iter", pr_params.max_iter, "iteration cap");

  // --- export -----------------------------------------------------------------
  std::string ex_snapshots, ex_network, ex_from, ex_to, ex_format = "edgelist", ex_out;
  double ex_station_radius = cloud::kDefaultStationRadiusM;
  auto* exp = app.add_subcommand("export", "export the range's graph for external tools");
  exp->add_option("--snapshots", ex_snapshots, "snapshot directory")->required();
  exp->add_option("--network", ex_network, "network file")->required();
  exp->add_option("--from", ex_from, "range start hour, YYYY-MM-DDTHH")->required();
  exp->add_option("--to", ex_to, "range end hour, YYYY-MM-DDTHH")->required();
  exp->add_option("--format", ex_format, "edgelist or dot");
  exp->add_option("--out", ex_out, "output directory")->required();
  exp->add_option("--station-radius", ex_station_radius, "AT-edge radius used at ingest");

  try {
    app.parse(argc, argv);

    if (generate->parsed()) return cmd_generate(gen_args);

    if (run->parsed()) {
      PipelineConfig cfg = load_config_with_env(run_config_path);
      if (!run_feed.empty()) cfg.feed_path = run_feed;
      if (!run_network.empty()) cfg.network_path = run_network;
      if (!run_out.empty()) cfg.out_dir = run_out;
      if (run_edge_nodes >= 0) cfg.edge_nodes = run_edge_nodes;
      if (run_lateness >= 0.0) cfg.lateness_bound_s = run_lateness;
      if (run_stop_threshold >= 0.0) cfg.stop_threshold_m = run_stop_threshold;
      if (run_station_radius >= 0.0) cfg.station_radius_m = run_station_radius;
      if (run_cadence >= 0.0) cfg.cadence_s = run_cadence;
      if (run_gap_factor >= 0.0) cfg.gap_factor = run_gap_factor;
      if (run_session_min >= 0) cfg.session_min_ms = run_session_min;
      if (run_session_max >= 0) cfg.session_max_ms = run_session_max;
      if (cfg.feed_path.empty() || cfg.network_path.empty() || cfg.out_dir.empty())
        throw std::runtime_error("run needs --feed, --network and --out (or a config file)");
      RunSummary summary = run_pipeline(cfg);
      std::cout << summary.to_line() << "\n";
      return 0;
    }

    if (query->parsed()) {
      cloud::GraphStore store = load_store(q_snapshots, q_network, q_station_radius);
      HourBucket from = parse_hour_or_throw(q_from);
      HourBucket to = parse_hour_or_throw(q_to);
      cloud::QueryResult result;
      if (q_sp->parsed()) {
        result = store.shortest_path(from, to, sp_from_station, sp_to_station);
      } else if (q_deg->parsed()) {
        result = store.degree(from, to, deg_station);
      } else {
        result = store.pagerank(from, to, pr_params);
      }
      std::cout << (q_machine ? result.to_machine() : result.to_table());
      return 0;
    }

    if (exp->parsed()) {
      cloud::GraphStore store = load_store(ex_snapshots, ex_network, ex_station_radius);
      HourBucket from = parse_hour_or_throw(ex_from);
      HourBucket to = parse_hour_or_throw(ex_to);
      cloud::ExportFormat format;
      if (ex_format == "edgelist") {
        format = cloud::ExportFormat::kEdgeList;
      } else if (ex_format == "dot") {
        format = cloud::ExportFormat::kDot;
      } else {
        throw std::runtime_error("unknown export format: " + ex_format);
      }
      store.export_graph(from, to, format, ex_out);
      std::cout << "exported to " << ex_out << "\n";
      return 0;
    }
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "fogpipe: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fogpipe: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
