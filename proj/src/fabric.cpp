#include "fogpipe/fabric.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <sstream>

namespace fogpipe::fabric {

// --- WatermarkTracker -----------------------------------------------------------

void WatermarkTracker::register_source(const std::string& source) { sources_[source]; }

void WatermarkTracker::observe(const std::string& source, int64_t ts_ms) {
  auto& state = sources_[source];
  state.seen = true;
  if (ts_ms > state.high_ts) state.high_ts = ts_ms;
  recompute();
}

void WatermarkTracker::finish_source(const std::string& source) {
  sources_[source].finished = true;
  recompute();
}

bool WatermarkTracker::all_finished() const {
  for (const auto& [id, state] : sources_) {
    if (!state.finished) return false;
  }
  return true;
}

void WatermarkTracker::recompute() {
  // Unstarted sources pin the watermark; finished sources drop out of the min.
  int64_t low = std::numeric_limits<int64_t>::max();
  bool any_active = false;
  for (const auto& [id, state] : sources_) {
    if (state.finished) continue;
    any_active = true;
    if (!state.seen) return;  // watermark held until every active source reports
    low = std::min(low, state.high_ts);
  }
  if (!any_active) return;  // final flush is driven by finish(), not the watermark
  int64_t candidate = low - bound_ms_;
  if (candidate > watermark_ms_) watermark_ms_ = candidate;
}

// --- batch serialization --------------------------------------------------------

std::string serialize_batch(const Batch& batch) {
  std::string out = "#batch " + std::to_string(batch.batch_id) + " " + to_string(batch.hour) + "\n";
  for (const auto& t : batch.tuples) {
    out += serialize_tuple(t);
    out += '\n';
  }
  return out;
}

bool parse_batch(std::istream& in, Batch& out, std::string& err) {
  std::string line;
  if (!std::getline(in, line)) {
    err = "empty batch stream";
    return false;
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::istringstream header(line);
  std::string tag, hour_text;
  uint64_t id = 0;
  if (!(header >> tag >> id >> hour_text) || tag != "#batch") {
    err = "bad batch header: " + line;
    return false;
  }
  Batch batch;
  batch.batch_id = id;
  if (!parse_hour_bucket(hour_text, batch.hour, err)) return false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    RawTuple raw;
    if (!parse_tuple(line, raw, err)) return false;
    ContextTuple ctx;
    if (!context_from_raw(raw, ctx, err)) return false;
    batch.tuples.push_back(std::move(ctx));
  }
  out = std::move(batch);
  return true;
}

// --- Fabric ---------------------------------------------------------------------

Fabric::Fabric(const FabricConfig& cfg)
    : cfg_(cfg),
      bound_ms_(static_cast<int64_t>(std::llround(cfg.lateness_bound_s * 1000.0))),
      watermark_(bound_ms_) {}

void Fabric::register_source(const std::string& source) { watermark_.register_source(source); }

FabricEvents Fabric::push(const std::string& source, CleanTuple tuple) {
  FabricEvents events;
  ++metrics_.tuples_in;

  int64_t wm = watermark_.watermark_ms();
  if (tuple.ts_ms < wm) {
    ++metrics_.late_drops;
    events.late_drops.push_back(
        RejectRecord{raw_from_clean(tuple), RejectReason::kLateDrop, RejectStage::kFabric});
    return events;
  }

  auto& track = tracks_[tuple.vehicle_id];
  if (track.has_last && tuple.ts_ms <= track.last_ts) {
    // Behind the vehicle's emitted frontier; emitting would break strict
    // per-vehicle ts order.
    ++metrics_.late_drops;
    events.late_drops.push_back(
        RejectRecord{raw_from_clean(tuple), RejectReason::kLateDrop, RejectStage::kFabric});
    return events;
  }
  int64_t ts = tuple.ts_ms;
  track.pending.insert_or_assign(ts, std::move(tuple));

  watermark_.observe(source, ts);
  flush_ready(events, false);
  return events;
}

FabricEvents Fabric::finish_source(const std::string& source) {
  FabricEvents events;
  watermark_.finish_source(source);
  flush_ready(events, watermark_.all_finished());
  return events;
}

FabricEvents Fabric::finish() {
  FabricEvents events;
  flush_ready(events, true);
  return events;
}

void Fabric::flush_ready(FabricEvents& events, bool flush_all) {
  int64_t wm = watermark_.watermark_ms();

  // Collect ripe tuples across vehicles, then emit in (ts, vehicle) order so
  // the stream order does not depend on map iteration details.
  std::vector<std::pair<int64_t, std::string>> ripe;
  for (auto& [vehicle, track] : tracks_) {
    for (const auto& [ts, t] : track.pending) {
      if (!flush_all && ts > wm) break;
      ripe.emplace_back(ts, vehicle);
    }
  }
  std::sort(ripe.begin(), ripe.end());

  for (const auto& [ts, vehicle] : ripe) {
    auto& track = tracks_[vehicle];
    auto it = track.pending.find(ts);
    CleanTuple t = std::move(it->second);
    track.pending.erase(it);
    ContextTuple ctx = contextualize_one(std::move(t));
    place_in_batch(ctx);
    ++metrics_.tuples_emitted;
    events.emitted.push_back(std::move(ctx));
  }

  close_batches(events, flush_all);
}

ContextTuple Fabric::contextualize_one(CleanTuple t) {
  auto& track = tracks_[t.vehicle_id];
  ContextTuple ctx;
  if (track.has_last) {
    double d = geo_distance_m(track.last_lat, track.last_lon, t.lat, t.lon);
    ctx.dist_prev_m = d;
    ctx.label = d < cfg_.stop_threshold_m ? MotionLabel::kStop : MotionLabel::kMove;
  } else {
    // No predecessor, no stop evidence.
    ctx.label = MotionLabel::kMove;
  }
  track.has_last = true;
  track.last_lat = t.lat;
  track.last_lon = t.lon;
  track.last_ts = t.ts_ms;
  ctx.tuple = std::move(t);
  return ctx;
}

void Fabric::place_in_batch(const ContextTuple& t) {
  HourBucket hour = hour_bucket_from_ms(t.tuple.ts_ms);
  auto it = open_batches_.find(hour);
  if (it == open_batches_.end()) {
    Batch b;
    b.hour = hour;
    it = open_batches_.emplace(hour, std::move(b)).first;
  }
  it->second.tuples.push_back(t);
}

void Fabric::close_batches(FabricEvents& events, bool flush_all) {
  int64_t wm = watermark_.watermark_ms();
  // open_batches_ is keyed by HourBucket, so closure happens in hour order.
  for (auto it = open_batches_.begin(); it != open_batches_.end();) {
    if (!flush_all && bucket_end_ms(it->first) > wm) break;
    Batch batch = std::move(it->second);
    batch.batch_id = next_batch_id_++;
    // Canonical tuple order inside a closed batch.
    std::stable_sort(batch.tuples.begin(), batch.tuples.end(),
                     [](const ContextTuple& a, const ContextTuple& b) {
                       if (a.tuple.ts_ms != b.tuple.ts_ms) return a.tuple.ts_ms < b.tuple.ts_ms;
                       return a.tuple.vehicle_id < b.tuple.vehicle_id;
                     });
    ++metrics_.batches_closed;
    events.closed_batches.push_back(std::move(batch));
    it = open_batches_.erase(it);
  }
}

std::vector<ContextTuple> label_offline(std::span<const CleanTuple> trajectory,
                                        double stop_threshold_m) {
  std::vector<ContextTuple> out;
  out.reserve(trajectory.size());
  const CleanTuple* prev = nullptr;
  for (const auto& t : trajectory) {
    ContextTuple ctx;
    ctx.tuple = t;
    if (prev != nullptr) {
      double d = geo_distance_m(prev->lat, prev->lon, t.lat, t.lon);
      ctx.dist_prev_m = d;
      ctx.label = d < stop_threshold_m ? MotionLabel::kStop : MotionLabel::kMove;
    } else {
      ctx.label = MotionLabel::kMove;
    }
    out.push_back(std::move(ctx));
    prev = &t;
  }
  return out;
}

// --- control channel ------------------------------------------------------------

const char* to_string(ControlKind k) {
  return k == ControlKind::kQueryResult ? "query_result" : "config_update";
}

std::string encode_frame(const ControlMessage& msg) {
  std::string body = std::string(to_string(msg.kind)) + "\n" + msg.destination + "\n" + msg.payload;
  return std::to_string(body.size()) + "\n" + body;
}

bool decode_frame(std::string_view frame, ControlMessage& out, std::string& err) {
  size_t nl = frame.find('\n');
  if (nl == std::string_view::npos) {
    err = "missing length prefix";
    return false;
  }
  size_t len = 0;
  auto [ptr, ec] = std::from_chars(frame.data(), frame.data() + nl, len);
  if (ec != std::errc() || ptr != frame.data() + nl) {
    err = "bad length prefix";
    return false;
  }
  std::string_view body = frame.substr(nl + 1);
  if (body.size() != len) {
    err = "frame length mismatch";
    return false;
  }
  size_t kind_end = body.find('\n');
  if (kind_end == std::string_view::npos) {
    err = "missing kind";
    return false;
  }
  std::string_view kind = body.substr(0, kind_end);
  size_t dest_end = body.find('\n', kind_end + 1);
  if (dest_end == std::string_view::npos) {
    err = "missing destination";
    return false;
  }
  ControlMessage msg;
  if (kind == "query_result") {
    msg.kind = ControlKind::kQueryResult;
  } else if (kind == "config_update") {
    msg.kind = ControlKind::kConfigUpdate;
  } else {
    err = "unknown control kind: " + std::string(kind);
    return false;
  }
  msg.destination = std::string(body.substr(kind_end + 1, dest_end - kind_end - 1));
  msg.payload = std::string(body.substr(dest_end + 1));
  out = std::move(msg);
  return true;
}

void ControlBus::register_edge(const std::string& edge_id) { inboxes_[edge_id]; }

size_t ControlBus::send(const ControlMessage& msg) {
  std::string frame = encode_frame(msg);
  if (msg.destination.empty()) {
    for (auto& [id, inbox] : inboxes_) inbox.push_back(frame);
    return inboxes_.size();
  }
  auto it = inboxes_.find(msg.destination);
  if (it == inboxes_.end()) throw RoutingError("unknown destination: " + msg.destination);
  it->second.push_back(frame);
  return 1;
}

bool ControlBus::receive(const std::string& edge_id, ControlMessage& out) {
  auto it = inboxes_.find(edge_id);
  if (it == inboxes_.end()) throw RoutingError("unknown edge: " + edge_id);
  if (it->second.empty()) return false;
  std::string frame = std::move(it->second.front());
  it->second.pop_front();
  std::string err;
  if (!decode_frame(frame, out, err)) throw RoutingError("corrupt frame: " + err);
  return true;
}

size_t ControlBus::pending(const std::string& edge_id) const {
  auto it = inboxes_.find(edge_id);
  if (it == inboxes_.end()) throw RoutingError("unknown edge: " + edge_id);
  return it->second.size();
}

}  // namespace fogpipe::fabric
