#include "fogpipe/feedgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fogpipe/fabric.hpp"
#include "fogpipe/rng.hpp"
#include "fogpipe/time_bucket.hpp"

namespace fogpipe::gen {

namespace {

constexpr uint64_t kCoordStream = 11;
constexpr uint64_t kPartitionStream = 12;
constexpr uint64_t kHubStream = 13;
constexpr uint64_t kTripStream = 21;
constexpr uint64_t kFaultStream = 31;

std::string station_name(int index, int width) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "s%0*d", std::min(width, 12), index + 1);
  return buf;
}

}  // namespace

const char* to_string(FaultKind k) {
  switch (k) {
    case FaultKind::kDrop: return "drop";
    case FaultKind::kDuplicate: return "duplicate";
    case FaultKind::kCorrupt: return "corrupt";
    case FaultKind::kLate: return "late";
  }
  return "unknown";
}

const char* to_string(CorruptMode m) {
  switch (m) {
    case CorruptMode::kEmptyVehicleId: return "empty_vehicle_id";
    case CorruptMode::kEmptyRouteId: return "empty_route_id";
    case CorruptMode::kLatRange: return "lat_range";
    case CorruptMode::kLonRange: return "lon_range";
    case CorruptMode::kTsWindow: return "ts_window";
    case CorruptMode::kUnknownRoute: return "unknown_route";
  }
  return "unknown";
}

void FaultProfile::validate() const {
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_unit(duplicate_rate) || !in_unit(drop_rate) || !in_unit(corrupt_rate))
    throw ConfigError("fault rates must lie in [0, 1]");
  if (duplicate_rate + drop_rate + corrupt_rate > 1.0)
    throw ConfigError("fault rates must sum to at most 1 (classes are exclusive per tuple)");
  if (max_lateness_s < 0.0) throw ConfigError("max_lateness must be >= 0");
}

size_t FaultLedger::count(FaultKind k) const {
  size_t n = 0;
  for (const auto& e : entries)
    if (e.kind == k) ++n;
  return n;
}

std::vector<int> Network::stations_by_weight() const {
  std::vector<int> order(stations.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [this](int a, int b) {
    if (stations[a].transfer_weight != stations[b].transfer_weight)
      return stations[a].transfer_weight > stations[b].transfer_weight;
    return stations[a].id < stations[b].id;
  });
  return order;
}

size_t GroundTruth::tuple_count() const {
  size_t n = 0;
  for (const auto& traj : trajectories) n += traj.size();
  return n;
}

// --- network generation ---------------------------------------------------------

Network generate_network(const NetworkSpec& spec) {
  if (spec.routes < 1 || spec.stations < 1) throw ConfigError("routes and stations must be >= 1");
  if (spec.stations < spec.routes * 2)
    throw ConfigError("need at least 2 stations per route: stations=" +
                      std::to_string(spec.stations) + " routes=" + std::to_string(spec.routes));
  if (spec.bbox.lat_min >= spec.bbox.lat_max || spec.bbox.lon_min >= spec.bbox.lon_max)
    throw ConfigError("bounding box must have positive extent");

  Rng root(spec.rng_seed);
  Network net;

  // Stations sit on a jittered grid, numbered in a serpentine sweep, so the
  // contiguous chunks below become spatially coherent routes of comparable
  // length (bus routes, not random jumps across town).
  int width = std::max(4, static_cast<int>(std::to_string(spec.stations).size()));
  int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(spec.stations))));
  int rows = (spec.stations + cols - 1) / cols;
  double cell_lat = (spec.bbox.lat_max - spec.bbox.lat_min) / rows;
  double cell_lon = (spec.bbox.lon_max - spec.bbox.lon_min) / cols;

  Rng coords = root.fork(kCoordStream);
  net.stations.resize(spec.stations);
  for (int i = 0; i < spec.stations; ++i) {
    int row = i / cols;
    int col = i % cols;
    if (row % 2 == 1) col = cols - 1 - col;  // serpentine
    Station& st = net.stations[i];
    st.id = station_name(i, width);
    st.lat = spec.bbox.lat_min + (row + 0.5 + (coords.next_double() - 0.5) * 0.5) * cell_lat;
    st.lon = spec.bbox.lon_min + (col + 0.5 + (coords.next_double() - 0.5) * 0.5) * cell_lon;
    st.transfer_weight = 1.0;
  }

  net.routes.resize(spec.routes);
  int base = spec.stations / spec.routes;
  int extra = spec.stations % spec.routes;
  int cursor = 0;
  for (int r = 0; r < spec.routes; ++r) {
    Route& route = net.routes[r];
    route.id = "r" + std::to_string(r + 1);
    route.number = std::to_string(r + 1);
    route.headway_s = spec.headway_s;
    int len = base + (r < extra ? 1 : 0);
    for (int i = 0; i < len; ++i) route.stations.push_back(cursor + i);
    cursor += len;
  }

  // Transfer hubs: the heaviest stations, spliced into extra routes so that
  // weight shows up in the station-transition structure as well as in
  // dwells. Membership count scales with weight; insertion takes the
  // minimum-detour position so hub routes stay comparable in length.
  Rng hubs = root.fork(kHubStream);
  int hub_count = std::min(spec.hub_count, spec.stations);
  double w_max = std::pow(spec.hub_weight_ratio, static_cast<double>(hub_count));
  for (int k = 0; k < hub_count; ++k) {
    int station = static_cast<int>(static_cast<size_t>(k) * spec.stations / hub_count);
    net.stations[station].transfer_weight =
        std::pow(spec.hub_weight_ratio, static_cast<double>(hub_count - k));
    if (spec.routes < 2) continue;
    double frac = net.stations[station].transfer_weight / w_max;
    int memberships = std::clamp(static_cast<int>(std::llround(frac * spec.routes)),
                                 std::min(4, spec.routes), spec.routes);
    std::vector<int> route_order(spec.routes);
    std::iota(route_order.begin(), route_order.end(), 0);
    hubs.shuffle(route_order);
    int added = 0;
    for (int r : route_order) {
      if (added >= memberships) break;
      Route& route = net.routes[r];
      if (std::find(route.stations.begin(), route.stations.end(), station) !=
          route.stations.end()) {
        ++added;  // already passes through the hub
        continue;
      }
      auto leg = [&](int a, int b) {
        return geo_distance_m(net.stations[a].lat, net.stations[a].lon, net.stations[b].lat,
                              net.stations[b].lon);
      };
      size_t best_pos = 1;
      double best_detour = std::numeric_limits<double>::max();
      for (size_t pos = 1; pos < route.stations.size(); ++pos) {
        int a = route.stations[pos - 1];
        int b = route.stations[pos];
        double detour = leg(a, station) + leg(station, b) - leg(a, b);
        if (detour < best_detour) {
          best_detour = detour;
          best_pos = pos;
        }
      }
      route.stations.insert(route.stations.begin() + static_cast<ptrdiff_t>(best_pos), station);
      ++added;
    }
  }

  for (const Route& route : net.routes) {
    for (int s : route.stations) net.stations[s].routes.push_back(route.id);
  }
  for (Station& st : net.stations) std::sort(st.routes.begin(), st.routes.end());

  return net;
}

// --- trip simulation ------------------------------------------------------------

namespace {

// Constant-speed motion along the route polyline, reversing at the ends,
// with dwell halts at stations.
class VehicleSim {
 public:
  VehicleSim(const Network& net, const Route& route, const NetworkSpec& spec, double start_offset_m)
      : net_(net), route_(route), spec_(spec) {
    cum_.resize(route.stations.size(), 0.0);
    for (size_t i = 1; i < route.stations.size(); ++i) {
      const Station& a = net.stations[route.stations[i - 1]];
      const Station& b = net.stations[route.stations[i]];
      cum_[i] = cum_[i - 1] + geo_distance_m(a.lat, a.lon, b.lat, b.lon);
    }
    total_ = cum_.back();
    if (total_ > 0.0) {
      double u = std::fmod(start_offset_m, 2.0 * total_);
      if (u <= total_) {
        s_ = u;
        dir_ = 1;
      } else {
        s_ = 2.0 * total_ - u;
        dir_ = -1;
      }
    }
    max_weight_ = 1.0;
    for (const Station& st : net.stations) max_weight_ = std::max(max_weight_, st.transfer_weight);
  }

  bool dwelling() const { return dwell_remaining_ > 0; }

  void position(double& lat, double& lon) const {
    if (total_ <= 0.0 || cum_.size() < 2) {
      const Station& st = net_.stations[route_.stations.front()];
      lat = st.lat;
      lon = st.lon;
      return;
    }
    size_t k = static_cast<size_t>(
        std::upper_bound(cum_.begin(), cum_.end(), s_) - cum_.begin());
    if (k == 0) k = 1;
    if (k >= cum_.size()) k = cum_.size() - 1;
    const Station& a = net_.stations[route_.stations[k - 1]];
    const Station& b = net_.stations[route_.stations[k]];
    double seg = cum_[k] - cum_[k - 1];
    double f = seg > 0.0 ? (s_ - cum_[k - 1]) / seg : 0.0;
    lat = a.lat + f * (b.lat - a.lat);
    lon = a.lon + f * (b.lon - a.lon);
  }

  // Moves the vehicle one tick forward; returns the station index if a dwell
  // started during the step, -1 otherwise.
  int step(Rng& rng, int& dwell_ticks) {
    if (dwell_remaining_ > 0) {
      --dwell_remaining_;
      if (dwell_remaining_ > 0) return -1;
      // Parked run complete; motion resumes within this same step.
    }
    if (total_ <= 0.0) return -1;
    double remaining = spec_.speed_mps * tick_s_;
    while (remaining > 0.0) {
      size_t nv = next_vertex();
      double dv = std::abs(cum_[nv] - s_);
      if (dv > remaining) {
        s_ += dir_ * remaining;
        return -1;
      }
      remaining -= dv;
      s_ = cum_[nv];
      if (nv == cum_.size() - 1)
        dir_ = -1;
      else if (nv == 0)
        dir_ = 1;
      int station = route_.stations[nv];
      double p = spec_.dwell_chance * net_.stations[station].transfer_weight / max_weight_;
      if (rng.chance(p)) {
        dwell_ticks = static_cast<int>(
            rng.next_int(spec_.dwell_ticks_min, std::max(spec_.dwell_ticks_min, spec_.dwell_ticks_max)));
        // The parked run is k+1 station fixes: the arrival fix plus k fixes
        // that land within jitter of their predecessor and label stop.
        dwell_remaining_ = dwell_ticks + 1;
        return station;
      }
    }
    return -1;
  }

  void set_tick_seconds(double s) { tick_s_ = s; }

 private:
  size_t next_vertex() const {
    if (dir_ > 0) {
      auto it = std::upper_bound(cum_.begin(), cum_.end(), s_);
      return static_cast<size_t>(it - cum_.begin());
    }
    auto it = std::lower_bound(cum_.begin(), cum_.end(), s_);
    return static_cast<size_t>(it - cum_.begin()) - 1;
  }

  const Network& net_;
  const Route& route_;
  const NetworkSpec& spec_;
  std::vector<double> cum_;
  double total_ = 0.0;
  double s_ = 0.0;
  int dir_ = 1;
  int dwell_remaining_ = 0;
  double max_weight_ = 1.0;
  double tick_s_ = 5.0;
};

}  // namespace

GroundTruth simulate_trips(const Network& network, const NetworkSpec& spec, double duration_s,
                           double cadence_s, int64_t session_start_ms) {
  if (duration_s <= 0.0 || cadence_s <= 0.0)
    throw ConfigError("duration and cadence must be > 0");

  GroundTruth truth;
  truth.network = network;

  Rng trips = Rng(spec.rng_seed).fork(kTripStream);
  const int ticks = static_cast<int>(std::floor(duration_s / cadence_s)) + 1;
  const int64_t cadence_ms = static_cast<int64_t>(std::llround(cadence_s * 1000.0));

  int vehicle_counter = 0;
  for (const Route& route : network.routes) {
    for (int v = 0; v < std::max(1, spec.vehicles_per_route); ++v) {
      std::string vehicle_id = "bus" + std::to_string(++vehicle_counter);
      Rng vrng = trips.fork(static_cast<uint64_t>(vehicle_counter));
      VehicleSim sim(network, route, spec, v * spec.headway_s * spec.speed_mps);
      sim.set_tick_seconds(cadence_s);

      std::vector<CleanTuple> traj;
      traj.reserve(static_cast<size_t>(ticks));
      for (int i = 0; i < ticks; ++i) {
        int64_t ts = session_start_ms + static_cast<int64_t>(i) * cadence_ms;
        double lat = 0.0, lon = 0.0;
        sim.position(lat, lon);
        if (sim.dwelling() && spec.dwell_jitter_m > 0.0) {
          // GPS noise while parked, well inside the stop threshold.
          double r = spec.dwell_jitter_m * std::sqrt(vrng.next_double());
          double theta = 2.0 * kPi * vrng.next_double();
          lat += r * std::sin(theta) / kMetersPerDegree;
          lon += r * std::cos(theta) / (kMetersPerDegree * std::cos(lat * kPi / 180.0));
        }
        CleanTuple t;
        t.route_id = route.id;
        t.route_number = route.number;
        t.vehicle_id = vehicle_id;
        t.lat = lat;
        t.lon = lon;
        t.ts_ms = ts;
        traj.push_back(std::move(t));

        if (i + 1 < ticks) {
          int dwell_ticks = 0;
          int station = sim.step(vrng, dwell_ticks);
          if (station >= 0) {
            // The vehicle parks at tick i+1 (arrival, still labeled move)
            // and idles through the k following ticks, which label stop.
            int available = ticks - (i + 2);
            DwellEvent ev;
            ev.vehicle_id = vehicle_id;
            ev.station = station;
            ev.start_ts_ms = ts + 2 * cadence_ms;
            ev.ticks = std::min(dwell_ticks, available);
            ev.duration_s = ev.ticks * cadence_s;
            if (ev.ticks > 0) truth.dwells.push_back(std::move(ev));
          }
        }
      }

      std::vector<ContextTuple> labeled =
          fabric::label_offline(std::span<const CleanTuple>(traj), fabric::kDefaultStopThresholdM);
      truth.vehicles.push_back(vehicle_id);
      truth.trajectories.push_back(std::move(labeled));
    }
  }
  return truth;
}

// --- fault injection ------------------------------------------------------------

namespace {

RawTuple corrupt_tuple(RawTuple raw, CorruptMode mode, Rng& rng) {
  switch (mode) {
    case CorruptMode::kEmptyVehicleId:
      raw.vehicle_id.clear();
      break;
    case CorruptMode::kEmptyRouteId:
      raw.route_id.clear();
      break;
    case CorruptMode::kLatRange: {
      double v = 91.0 + rng.next_double() * 89.0;
      raw.lat = rng.chance(0.5) ? v : -v;
      break;
    }
    case CorruptMode::kLonRange: {
      double v = 181.0 + rng.next_double() * 179.0;
      raw.lon = rng.chance(0.5) ? v : -v;
      break;
    }
    case CorruptMode::kTsWindow: {
      int64_t shift = kMsPerDay + rng.next_int(0, kMsPerDay);
      raw.ts_ms = *raw.ts_ms + (rng.chance(0.5) ? shift : -shift);
      break;
    }
    case CorruptMode::kUnknownRoute:
      raw.route_id += "?";
      break;
  }
  return raw;
}

}  // namespace

FeedArtifacts emit_feed(const GroundTruth& truth, const FaultProfile& faults) {
  faults.validate();
  Rng rng = Rng(faults.rng_seed).fork(kFaultStream);

  struct Pending {
    RawTuple raw;
    int64_t sort_ms;
    uint64_t seq;
  };
  std::vector<Pending> pending;
  pending.reserve(truth.tuple_count());
  FaultLedger ledger;

  const int64_t lateness_ms = static_cast<int64_t>(std::llround(faults.max_lateness_s * 1000.0));
  uint64_t seq = 0;

  auto enqueue = [&](RawTuple raw) {
    int64_t delay = lateness_ms > 0 ? rng.next_int(0, lateness_ms) : 0;
    int64_t eff_ts = raw.ts_ms ? *raw.ts_ms : 0;
    pending.push_back(Pending{std::move(raw), eff_ts + delay, seq++});
  };

  for (const auto& traj : truth.trajectories) {
    for (size_t i = 0; i < traj.size(); ++i) {
      const CleanTuple& t = traj[i].tuple;
      RawTuple raw = raw_from_clean(t);
      raw.extras.clear();  // labels live in the truth file, not the feed

      double u = rng.next_double();
      double edge = faults.drop_rate;
      if (u < edge) {
        // Endpoint ticks are never dropped: a gap needs a bracketing pair of
        // surviving tuples to be detectable at all.
        if (i > 0 && i + 1 < traj.size()) {
          ledger.entries.push_back(
              FaultEntry{FaultKind::kDrop, t.vehicle_id, t.ts_ms, ""});
          continue;
        }
        enqueue(std::move(raw));
        continue;
      }
      edge += faults.duplicate_rate;
      if (u < edge) {
        ledger.entries.push_back(
            FaultEntry{FaultKind::kDuplicate, t.vehicle_id, t.ts_ms, ""});
        RawTuple copy = raw;
        enqueue(std::move(raw));
        enqueue(std::move(copy));
        continue;
      }
      edge += faults.corrupt_rate;
      if (u < edge) {
        auto mode = static_cast<CorruptMode>(rng.next_int(0, 5));
        ledger.entries.push_back(
            FaultEntry{FaultKind::kCorrupt, t.vehicle_id, t.ts_ms, to_string(mode)});
        enqueue(corrupt_tuple(std::move(raw), mode, rng));
        continue;
      }
      enqueue(std::move(raw));
    }
  }

  std::stable_sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
    if (a.sort_ms != b.sort_ms) return a.sort_ms < b.sort_ms;
    return a.seq < b.seq;
  });

  // Arrival-order inversions are the injected lateness faults.
  int64_t running_max = std::numeric_limits<int64_t>::min();
  FeedArtifacts artifacts;
  artifacts.feed.reserve(pending.size());
  for (auto& p : pending) {
    int64_t eff_ts = p.raw.ts_ms ? *p.raw.ts_ms : 0;
    if (eff_ts < running_max) {
      ledger.entries.push_back(
          FaultEntry{FaultKind::kLate, p.raw.vehicle_id, eff_ts, ""});
    } else {
      running_max = eff_ts;
    }
    artifacts.feed.push_back(std::move(p.raw));
  }
  artifacts.ledger = std::move(ledger);
  return artifacts;
}

// --- files ----------------------------------------------------------------------

void save_network(const std::string& path, const Network& network) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write network file: " + path);
  out << "# station_id,lat,lon,routes\n";
  for (const Station& st : network.stations) {
    if (st.transfer_weight != 1.0)
      out << "# weight " << st.id << " " << format_double(st.transfer_weight) << "\n";
  }
  for (const Station& st : network.stations) {
    out << st.id << "," << format_double(st.lat) << "," << format_double(st.lon) << ",";
    for (size_t i = 0; i < st.routes.size(); ++i) {
      if (i) out << "|";
      out << st.routes[i];
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Network load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open network file: " + path);
  Network net;
  std::map<std::string, double> weights;
  std::map<std::string, bool> route_seen;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line);
      std::string hash, tag, id;
      double w = 0.0;
      if (ss >> hash >> tag >> id >> w && tag == "weight") weights[id] = w;
      continue;
    }
    std::istringstream ss(line);
    std::string id, lat_s, lon_s, routes_s;
    if (!std::getline(ss, id, ',') || !std::getline(ss, lat_s, ',') ||
        !std::getline(ss, lon_s, ','))
      throw std::runtime_error("malformed network line: " + line);
    std::getline(ss, routes_s);
    Station st;
    st.id = id;
    st.lat = std::stod(lat_s);
    st.lon = std::stod(lon_s);
    std::istringstream rs(routes_s);
    std::string route;
    while (std::getline(rs, route, '|')) {
      if (route.empty()) continue;
      st.routes.push_back(route);
      route_seen[route] = true;
    }
    auto wit = weights.find(id);
    if (wit != weights.end()) st.transfer_weight = wit->second;
    net.stations.push_back(std::move(st));
  }
  // Route membership is all the network file carries; the visit order is
  // generator-internal and not needed downstream.
  for (const auto& [id, seen] : route_seen) {
    Route r;
    r.id = id;
    r.number = id.size() > 1 ? id.substr(1) : id;
    net.routes.push_back(std::move(r));
  }
  return net;
}

void save_truth(const std::string& path, const GroundTruth& truth) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write truth file: " + path);
  for (const DwellEvent& d : truth.dwells) {
    out << "# dwell " << d.vehicle_id << " " << truth.network.stations[d.station].id << " "
        << d.start_ts_ms << " " << d.ticks << "\n";
  }
  for (const auto& traj : truth.trajectories) {
    for (const ContextTuple& t : traj) out << serialize_tuple(t) << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void save_ledger(const std::string& path, const FaultLedger& ledger) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write ledger file: " + path);
  for (const FaultEntry& e : ledger.entries)
    out << to_string(e.kind) << "," << e.vehicle_id << "," << e.ts_ms << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

FaultLedger load_ledger(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ledger file: " + path);
  FaultLedger ledger;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string kind, vehicle, ts;
    if (!std::getline(ss, kind, ',') || !std::getline(ss, vehicle, ',') || !std::getline(ss, ts))
      throw std::runtime_error("malformed ledger line: " + line);
    FaultEntry e;
    if (kind == "drop")
      e.kind = FaultKind::kDrop;
    else if (kind == "duplicate")
      e.kind = FaultKind::kDuplicate;
    else if (kind == "corrupt")
      e.kind = FaultKind::kCorrupt;
    else if (kind == "late")
      e.kind = FaultKind::kLate;
    else
      throw std::runtime_error("unknown fault kind: " + kind);
    e.vehicle_id = vehicle;
    e.ts_ms = std::stoll(ts);
    ledger.entries.push_back(std::move(e));
  }
  return ledger;
}

}  // namespace fogpipe::gen
