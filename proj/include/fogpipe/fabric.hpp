#ifndef FOGPIPE_FABRIC_HPP_
#define FOGPIPE_FABRIC_HPP_

#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fogpipe/feed.hpp"
#include "fogpipe/geo.hpp"
#include "fogpipe/time_bucket.hpp"

namespace fogpipe::fabric {

inline constexpr double kDefaultStopThresholdM = 15.0;
inline constexpr double kDefaultLatenessBoundS = 10.0;
inline constexpr int64_t kWatermarkMin = std::numeric_limits<int64_t>::min();

// Lateness-bounded progress marker. The watermark is the minimum over all
// registered sources of the highest timestamp seen, minus the lateness
// bound; it never moves backwards. A source that has not reported yet pins
// the watermark at -inf; a finished source no longer constrains it.
class WatermarkTracker {
 public:
  explicit WatermarkTracker(int64_t lateness_bound_ms) : bound_ms_(lateness_bound_ms) {}

  void register_source(const std::string& source);
  void observe(const std::string& source, int64_t ts_ms);
  void finish_source(const std::string& source);

  int64_t watermark_ms() const { return watermark_ms_; }
  bool all_finished() const;

 private:
  void recompute();

  struct SourceState {
    int64_t high_ts = kWatermarkMin;
    bool seen = false;
    bool finished = false;
  };

  int64_t bound_ms_;
  int64_t watermark_ms_ = kWatermarkMin;
  std::map<std::string, SourceState> sources_;
};

// One hour of contextualized tuples; immutable once closed.
struct Batch {
  uint64_t batch_id = 0;
  HourBucket hour;
  std::vector<ContextTuple> tuples;
};

// Serialization contract: header line `#batch <id> <YYYY-MM-DDTHH>` followed
// by one ContextTuple wire line per tuple.
std::string serialize_batch(const Batch& batch);
bool parse_batch(std::istream& in, Batch& out, std::string& err);

struct FabricConfig {
  double lateness_bound_s = kDefaultLatenessBoundS;
  double stop_threshold_m = kDefaultStopThresholdM;
};

struct FabricMetrics {
  uint64_t tuples_in = 0;
  uint64_t tuples_emitted = 0;
  uint64_t late_drops = 0;
  uint64_t batches_closed = 0;
};

// What one push (or the final flush) produced.
struct FabricEvents {
  std::vector<ContextTuple> emitted;
  std::vector<Batch> closed_batches;
  std::vector<RejectRecord> late_drops;
};

// The access-layer stage: per-vehicle reordering under the watermark,
// stop/move contextualization against the previous emitted tuple, and
// hour-bucket batch assembly. Single-threaded; the run topology serializes
// all sources into one fabric instance.
class Fabric {
 public:
  explicit Fabric(const FabricConfig& cfg);

  void register_source(const std::string& source);

  // Feed one clean tuple from a source. Returns everything that became
  // ready: emitted context tuples, closed batches, late drops.
  FabricEvents push(const std::string& source, CleanTuple tuple);

  // Declares one source exhausted.
  FabricEvents finish_source(const std::string& source);

  // Closes every remaining buffer and batch.
  FabricEvents finish();

  int64_t watermark_ms() const { return watermark_.watermark_ms(); }
  const FabricMetrics& metrics() const { return metrics_; }

 private:
  void flush_ready(FabricEvents& events, bool flush_all);
  ContextTuple contextualize_one(CleanTuple t);
  void place_in_batch(const ContextTuple& t);
  void close_batches(FabricEvents& events, bool flush_all);

  struct VehicleTrack {
    std::map<int64_t, CleanTuple> pending;  // reorder buffer keyed by ts
    bool has_last = false;
    double last_lat = 0.0;
    double last_lon = 0.0;
    int64_t last_ts = kWatermarkMin;
  };

  FabricConfig cfg_;
  int64_t bound_ms_;
  WatermarkTracker watermark_;
  std::map<std::string, VehicleTrack> tracks_;
  std::map<HourBucket, Batch> open_batches_;
  uint64_t next_batch_id_ = 0;
  FabricMetrics metrics_;
};

// Offline reference labeling: applies the stop/move rule to an already
// ordered trajectory. Shared by the generator (ground-truth labels) and used
// as the streaming path's cross-check in tests.
std::vector<ContextTuple> label_offline(std::span<const CleanTuple> trajectory,
                                        double stop_threshold_m = kDefaultStopThresholdM);

// --- downstream control channel ------------------------------------------------

class RoutingError : public std::runtime_error {
 public:
  explicit RoutingError(const std::string& what) : std::runtime_error(what) {}
};

enum class ControlKind { kQueryResult, kConfigUpdate };

const char* to_string(ControlKind k);

struct ControlMessage {
  ControlKind kind = ControlKind::kQueryResult;
  std::string destination;  // edge node id; empty means broadcast
  std::string payload;
};

// Length-prefixed text frame: "<len>\n<kind>\n<destination>\n<payload>"
// where len counts the bytes after the first newline.
std::string encode_frame(const ControlMessage& msg);
bool decode_frame(std::string_view frame, ControlMessage& out, std::string& err);

// In-process stand-in for the downstream channel: per-destination FIFO
// inboxes holding encoded frames.
class ControlBus {
 public:
  void register_edge(const std::string& edge_id);

  // Returns the number of inboxes the message reached. Unknown unicast
  // destination throws RoutingError.
  size_t send(const ControlMessage& msg);

  bool receive(const std::string& edge_id, ControlMessage& out);
  size_t pending(const std::string& edge_id) const;

 private:
  std::map<std::string, std::deque<std::string>> inboxes_;
};

}  // namespace fogpipe::fabric

#endif  // FOGPIPE_FABRIC_HPP_
