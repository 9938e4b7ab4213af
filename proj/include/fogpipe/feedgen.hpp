#ifndef FOGPIPE_FEEDGEN_HPP_
#define FOGPIPE_FEEDGEN_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fogpipe/feed.hpp"
#include "fogpipe/geo.hpp"

namespace fogpipe::gen {

// Thrown for invalid generator configuration (counts, rates).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct NetworkSpec {
  int routes = 30;
  int stations = 642;
  BoundingBox bbox{46.05, 46.15, -64.90, -64.75};
  int vehicles_per_route = 1;
  double headway_s = 600.0;  // stagger between vehicles on one route
  double speed_mps = 10.0;
  // Transfer hubs: the top `hub_count` stations by transfer-traffic weight.
  // Consecutive hub weights are separated by `hub_weight_ratio`; every other
  // station has weight 1. Hubs are spliced into extra routes so weight also
  // drives how many routes pass through them.
  int hub_count = 3;
  double hub_weight_ratio = 3.0;
  // Probability of a dwell when a vehicle crosses a station, scaled by
  // station weight relative to the heaviest station.
  double dwell_chance = 0.25;
  int dwell_ticks_min = 2;
  int dwell_ticks_max = 4;
  double dwell_jitter_m = 2.0;  // GPS noise while parked; well under the stop threshold
  uint64_t rng_seed = 1;
};

struct Station {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
  std::vector<std::string> routes;  // membership, in route id order
  double transfer_weight = 1.0;
};

struct Route {
  std::string id;
  std::string number;
  std::vector<int> stations;  // indexes into Network::stations, visit order
  double headway_s = 600.0;
};

struct Network {
  std::vector<Station> stations;
  std::vector<Route> routes;

  // Station indices sorted by descending transfer weight (ties by id);
  // the planted "busiest station" ranking.
  std::vector<int> stations_by_weight() const;
};

struct DwellEvent {
  std::string vehicle_id;
  int station = 0;  // index into Network::stations
  int64_t start_ts_ms = 0;
  int ticks = 0;
  double duration_s = 0.0;
};

struct GroundTruth {
  Network network;
  std::vector<std::string> vehicles;
  // Ideal trajectory per vehicle, labeled offline with the stop/move rule.
  std::vector<std::vector<ContextTuple>> trajectories;
  std::vector<DwellEvent> dwells;

  size_t tuple_count() const;
};

struct FaultProfile {
  double duplicate_rate = 0.0;
  double drop_rate = 0.0;
  double corrupt_rate = 0.0;
  double max_lateness_s = 0.0;  // arrival delay drawn uniformly in [0, max_lateness]
  uint64_t rng_seed = 1;

  bool zero() const {
    return duplicate_rate == 0.0 && drop_rate == 0.0 && corrupt_rate == 0.0 &&
           max_lateness_s == 0.0;
  }
  void validate() const;  // throws ConfigError
};

enum class FaultKind { kDrop, kDuplicate, kCorrupt, kLate };

const char* to_string(FaultKind k);

// Which core field a corruption damaged; empty-string modes are caught by the
// missing-attribute step, range/window/route modes by the wrong-value step.
enum class CorruptMode {
  kEmptyVehicleId,
  kEmptyRouteId,
  kLatRange,
  kLonRange,
  kTsWindow,
  kUnknownRoute,
};

const char* to_string(CorruptMode m);

struct FaultEntry {
  FaultKind kind = FaultKind::kDrop;
  std::string vehicle_id;
  int64_t ts_ms = 0;
  std::string detail;  // corrupt mode or delay, not serialized to ledger.txt
};

struct FaultLedger {
  std::vector<FaultEntry> entries;

  size_t count(FaultKind k) const;
};

struct FeedArtifacts {
  std::vector<RawTuple> feed;  // arrival order
  FaultLedger ledger;
};

// --- operations ----------------------------------------------------------------

// Deterministic synthetic transit network. Throws ConfigError when
// stations < routes * 2 (each route needs two distinct stations).
Network generate_network(const NetworkSpec& spec);

// One tuple per vehicle per cadence tick at t = 0, cadence, ..., duration
// (inclusive). Vehicles run their route polyline back and forth at constant
// speed and halt for dwell events at stations.
GroundTruth simulate_trips(const Network& network, const NetworkSpec& spec, double duration_s,
                           double cadence_s, int64_t session_start_ms);

// Applies the fault profile to the truth, per tuple and in this order:
// drop, duplicate, corrupt, lateness. The classes are mutually exclusive per
// tuple so the ledger reconciles exactly with downstream cleaning counters.
FeedArtifacts emit_feed(const GroundTruth& truth, const FaultProfile& faults);

// --- files ----------------------------------------------------------------------

void save_network(const std::string& path, const Network& network);
Network load_network(const std::string& path);

void save_truth(const std::string& path, const GroundTruth& truth);
void save_ledger(const std::string& path, const FaultLedger& ledger);
FaultLedger load_ledger(const std::string& path);

}  // namespace fogpipe::gen

#endif  // FOGPIPE_FEEDGEN_HPP_
