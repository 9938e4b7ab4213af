#ifndef FOGPIPE_EDGE_HPP_
#define FOGPIPE_EDGE_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fogpipe/feed.hpp"

namespace fogpipe::edge {

struct CleaningConfig {
  double expected_cadence_s = 5.0;
  // A per-vehicle timestamp gap larger than gap_factor * cadence flags
  // missing tuples. Must be > 1.
  double gap_factor = 1.5;
  int64_t session_min_ms = 0;
  int64_t session_max_ms = 0;  // inclusive
  std::map<std::string, std::string> known_routes;  // route_id -> route_number
  // Attribute names retained by the strip step; extras whose key is not
  // listed are removed and counted.
  std::vector<std::string> core_schema = {"route_id", "route_number", "vehicle_id",
                                          "lat",      "lon",          "ts"};

  void validate() const;  // throws std::invalid_argument
};

struct GapEntry {
  std::string vehicle_id;
  int64_t gap_start_ms = 0;
  int64_t gap_end_ms = 0;
  int64_t estimated_missing = 0;
};

struct CleaningReport {
  uint64_t input_count = 0;   // successfully parsed tuples
  uint64_t output_count = 0;
  uint64_t duplicates_removed = 0;
  uint64_t missing_attribute_rejects = 0;
  uint64_t wrong_value_rejects = 0;
  uint64_t redundant_attributes_stripped = 0;  // key=value pairs removed
  uint64_t malformed_lines = 0;  // unparseable lines, outside the conservation equation
  std::vector<GapEntry> gaps;

  int64_t estimated_missing_total() const;
  // input = output + duplicates + missing_attribute + wrong_value.
  bool conservation_holds() const;
  // Flat key=value block with stable key names.
  std::string to_text() const;
};

// --- cleaning steps (exposed for unit tests; clean_stream composes them) --------

// Step (3): reject on any absent or empty core field. A missing route_number
// is repaired from the known-route registry when possible, the only
// imputation the stage performs.
bool check_missing_attributes(RawTuple& t, const CleaningConfig& cfg);

// Step (5): reject on out-of-range coordinates, ts outside the session
// window, or an unknown route.
bool check_wrong_values(const RawTuple& t, const CleaningConfig& cfg);

// Step (4): drop extras not named in core_schema; returns the strip count.
size_t strip_redundant(RawTuple& t, const CleaningConfig& cfg);

// Step (1): gap scan over one vehicle's timestamps (sorted ascending).
// Missing tuples are reported, never synthesized.
std::vector<GapEntry> detect_missing(const std::string& vehicle_id,
                                     const std::vector<int64_t>& sorted_ts,
                                     const CleaningConfig& cfg);

// The sensing-layer stream transformer. Feed lines in arrival order, then
// call finish() once for the gap report. Step order per tuple: parse ->
// missing-attribute check -> wrong-value check -> strip redundant -> dedupe;
// gap detection runs over the deduplicated per-vehicle timestamps at finish.
class EdgeNode {
 public:
  EdgeNode(std::string node_id, const CleaningConfig& cfg);

  struct Outcome {
    std::optional<CleanTuple> clean;
    std::optional<RejectRecord> reject;
    bool malformed = false;
    std::string error;
  };

  Outcome process_line(const std::string& line);
  Outcome process_tuple(RawTuple raw);  // pre-parsed input; assigns arrival_seq

  const CleaningReport& finish();

  const std::string& node_id() const { return node_id_; }
  const CleaningReport& report() const { return report_; }

 private:
  Outcome run_steps(RawTuple raw);

  std::string node_id_;
  CleaningConfig cfg_;
  CleaningReport report_;
  uint64_t next_seq_ = 0;
  bool finished_ = false;
  // Dedupe identity is (vehicle_id, ts); first arrival wins.
  std::unordered_set<std::string> seen_keys_;
  std::map<std::string, std::vector<int64_t>> ts_by_vehicle_;
};

struct CleanStreamResult {
  std::vector<CleanTuple> tuples;
  std::vector<RejectRecord> rejects;
  CleaningReport report;
};

// Batch convenience over EdgeNode. Throws std::runtime_error when the input
// stream itself is unreadable; individual bad tuples never abort the stream.
CleanStreamResult clean_stream(std::istream& in, const CleaningConfig& cfg,
                               const std::string& node_id = "edge0");

}  // namespace fogpipe::edge

#endif  // FOGPIPE_EDGE_HPP_
