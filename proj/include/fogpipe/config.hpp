#ifndef FOGPIPE_CONFIG_HPP_
#define FOGPIPE_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <string>

namespace fogpipe {

// Every tunable of the run topology, loadable from a flat key=value file
// (diff-able, fixture-friendly) and overridable by CLI flags. A fully
// populated config round-trips through its file format losslessly.
struct PipelineConfig {
  std::string feed_path;
  std::string network_path;
  std::string out_dir;

  int edge_nodes = 4;  // feed is sharded by vehicle_id across this many nodes
  double cadence_s = 5.0;
  double gap_factor = 1.5;
  int64_t session_min_ms = 0;
  int64_t session_max_ms = 0;
  double lateness_bound_s = 10.0;
  double stop_threshold_m = 15.0;
  double station_radius_m = 30.0;
  double pagerank_damping = 0.85;
  double pagerank_tol = 1e-8;
  int pagerank_max_iter = 100;
  uint64_t rng_seed = 1;

  void validate() const;  // throws std::invalid_argument

  void set(const std::string& key, const std::string& value);
  std::map<std::string, std::string> to_map() const;

  static PipelineConfig from_file(const std::string& path);
  void to_file(const std::string& path) const;
};

}  // namespace fogpipe

#endif  // FOGPIPE_CONFIG_HPP_
