#ifndef FOGPIPE_FEED_HPP_
#define FOGPIPE_FEED_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fogpipe {

// Wire format: comma-separated UTF-8 lines with a fixed six-column core
// prefix and key=value extras, LF terminated, '#' comment lines ignored.
//
//   route_id,route_number,vehicle_id,lat,lon,ts[,key=value...]
//
// lat/lon are decimal degrees, ts is epoch milliseconds. Extras keys and
// values must not contain ',' or LF; values may contain '='.

using ExtrasList = std::vector<std::pair<std::string, std::string>>;

// An observation exactly as it arrived. Numeric core columns may be empty
// on the wire (broken by design); they parse to nullopt.
struct RawTuple {
  std::string route_id;
  std::string route_number;
  std::string vehicle_id;
  std::optional<double> lat;
  std::optional<double> lon;
  std::optional<int64_t> ts_ms;
  ExtrasList extras;
  uint64_t arrival_seq = 0;  // assigned at ingestion, per edge node

  bool operator==(const RawTuple& o) const {
    return route_id == o.route_id && route_number == o.route_number &&
           vehicle_id == o.vehicle_id && lat == o.lat && lon == o.lon && ts_ms == o.ts_ms &&
           extras == o.extras;
  }
};

// An observation that passed every cleaning step. Validity is the producer's
// contract: coordinates in range, ts inside the session window, known route,
// unique (vehicle_id, ts).
struct CleanTuple {
  std::string route_id;
  std::string route_number;
  std::string vehicle_id;
  double lat = 0.0;
  double lon = 0.0;
  int64_t ts_ms = 0;
  ExtrasList extras;  // whitelisted survivors of the strip step; usually empty
  uint64_t arrival_seq = 0;

  bool operator==(const CleanTuple& o) const {
    return route_id == o.route_id && route_number == o.route_number &&
           vehicle_id == o.vehicle_id && lat == o.lat && lon == o.lon && ts_ms == o.ts_ms &&
           extras == o.extras;
  }
};

enum class MotionLabel { kStop, kMove };

const char* to_string(MotionLabel label);

// A clean observation enriched with the stop/move context. dist_prev_m is
// the distance to the vehicle's previous tuple; absent for a trajectory's
// first tuple. Invariant: label == kStop iff dist_prev_m && *dist_prev_m < threshold.
struct ContextTuple {
  CleanTuple tuple;
  MotionLabel label = MotionLabel::kMove;
  std::optional<double> dist_prev_m;

  bool operator==(const ContextTuple& o) const {
    return tuple == o.tuple && label == o.label && dist_prev_m == o.dist_prev_m;
  }
};

enum class RejectReason { kDuplicate, kMissingAttribute, kWrongValue, kLateDrop };
enum class RejectStage { kEdge, kFabric };

const char* to_string(RejectReason r);
const char* to_string(RejectStage s);

// Audit record: every tuple entering the pipeline is accounted for exactly
// once as context output, reject, or synthesized-gap report entry.
struct RejectRecord {
  RawTuple tuple;
  RejectReason reason = RejectReason::kWrongValue;
  RejectStage stage = RejectStage::kEdge;
};

// --- parsing / serialization -------------------------------------------------

// Parses one wire line. Returns false and sets err (naming the offending
// column) on malformed input: wrong core arity or a non-empty, non-numeric
// lat/lon/ts. Does not assign arrival_seq.
bool parse_tuple(std::string_view line, RawTuple& out, std::string& err);

std::string serialize_tuple(const RawTuple& t);
std::string serialize_tuple(const CleanTuple& t);
std::string serialize_tuple(const ContextTuple& t);

// Conversions between stages. raw_from_context appends the label/dist
// extras; context_from_raw reads them back (for batch-file loading).
RawTuple raw_from_clean(const CleanTuple& t);
RawTuple raw_from_context(const ContextTuple& t);
bool clean_from_raw(const RawTuple& raw, CleanTuple& out, std::string& err);
bool context_from_raw(const RawTuple& raw, ContextTuple& out, std::string& err);

// Shortest decimal text that round-trips the exact double value.
std::string format_double(double v);

// --- feed files ---------------------------------------------------------------

// Line-oriented reader for feed files. Skips '#' comments and blank lines
// and assigns arrival_seq in arrival order (a bijection between accepted
// records and sequence numbers for this reader).
class FeedReader {
 public:
  explicit FeedReader(std::istream& in) : in_(in) {}

  struct Record {
    RawTuple tuple;
    bool malformed = false;
    std::string error;
    std::string line;  // original text, kept for audit trails
  };

  // Returns false at end of input.
  bool next(Record& out);

  uint64_t issued() const { return next_seq_; }

 private:
  std::istream& in_;
  uint64_t next_seq_ = 0;
};

std::vector<RawTuple> read_feed_file(const std::string& path);
void write_feed_file(const std::string& path, const std::vector<RawTuple>& tuples,
                     const std::string& header_comment = "");

}  // namespace fogpipe

#endif  // FOGPIPE_FEED_HPP_
