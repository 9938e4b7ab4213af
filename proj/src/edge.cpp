#include "fogpipe/edge.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <stdexcept>

namespace fogpipe::edge {

void CleaningConfig::validate() const {
  if (gap_factor <= 1.0) throw std::invalid_argument("gap_factor must be > 1");
  if (expected_cadence_s <= 0.0) throw std::invalid_argument("expected_cadence must be > 0");
  if (session_min_ms >= session_max_ms)
    throw std::invalid_argument("session window must satisfy ts_min < ts_max");
}

int64_t CleaningReport::estimated_missing_total() const {
  int64_t total = 0;
  for (const auto& g : gaps) total += g.estimated_missing;
  return total;
}

bool CleaningReport::conservation_holds() const {
  return input_count ==
         output_count + duplicates_removed + missing_attribute_rejects + wrong_value_rejects;
}

std::string CleaningReport::to_text() const {
  std::string out;
  auto kv = [&out](const char* key, uint64_t value) {
    out += key;
    out += '=';
    out += std::to_string(value);
    out += '\n';
  };
  kv("input_count", input_count);
  kv("output_count", output_count);
  kv("duplicates_removed", duplicates_removed);
  kv("missing_attribute_rejects", missing_attribute_rejects);
  kv("wrong_value_rejects", wrong_value_rejects);
  kv("redundant_attributes_stripped", redundant_attributes_stripped);
  kv("malformed_lines", malformed_lines);
  kv("missing_gaps_detected", gaps.size());
  kv("estimated_missing_total", static_cast<uint64_t>(estimated_missing_total()));
  for (const auto& g : gaps) {
    out += "gap=" + g.vehicle_id + "," + std::to_string(g.gap_start_ms) + "," +
           std::to_string(g.gap_end_ms) + "," + std::to_string(g.estimated_missing) + "\n";
  }
  return out;
}

bool check_missing_attributes(RawTuple& t, const CleaningConfig& cfg) {
  if (t.route_id.empty() || t.vehicle_id.empty()) return false;
  if (!t.lat || !t.lon || !t.ts_ms) return false;
  if (t.route_number.empty()) {
    auto it = cfg.known_routes.find(t.route_id);
    if (it == cfg.known_routes.end()) return false;
    t.route_number = it->second;  // functionally determined by route_id
  }
  return true;
}

bool check_wrong_values(const RawTuple& t, const CleaningConfig& cfg) {
  if (!t.lat || !t.lon || !t.ts_ms) return false;
  if (*t.lat < -90.0 || *t.lat > 90.0) return false;
  if (*t.lon < -180.0 || *t.lon > 180.0) return false;
  if (*t.ts_ms < cfg.session_min_ms || *t.ts_ms > cfg.session_max_ms) return false;
  if (!cfg.known_routes.empty() && cfg.known_routes.find(t.route_id) == cfg.known_routes.end())
    return false;
  return true;
}

size_t strip_redundant(RawTuple& t, const CleaningConfig& cfg) {
  if (t.extras.empty()) return 0;
  size_t before = t.extras.size();
  auto keep = [&cfg](const std::pair<std::string, std::string>& kv) {
    return std::find(cfg.core_schema.begin(), cfg.core_schema.end(), kv.first) !=
           cfg.core_schema.end();
  };
  ExtrasList kept;
  for (auto& kv : t.extras) {
    if (keep(kv)) kept.push_back(std::move(kv));
  }
  t.extras = std::move(kept);
  return before - t.extras.size();
}

std::vector<GapEntry> detect_missing(const std::string& vehicle_id,
                                     const std::vector<int64_t>& sorted_ts,
                                     const CleaningConfig& cfg) {
  std::vector<GapEntry> gaps;
  const double cadence_ms = cfg.expected_cadence_s * 1000.0;
  const double limit = cfg.gap_factor * cadence_ms;
  for (size_t i = 1; i < sorted_ts.size(); ++i) {
    double delta = static_cast<double>(sorted_ts[i] - sorted_ts[i - 1]);
    if (delta > limit) {
      GapEntry g;
      g.vehicle_id = vehicle_id;
      g.gap_start_ms = sorted_ts[i - 1];
      g.gap_end_ms = sorted_ts[i];
      g.estimated_missing = std::llround(delta / cadence_ms) - 1;
      gaps.push_back(std::move(g));
    }
  }
  return gaps;
}

EdgeNode::EdgeNode(std::string node_id, const CleaningConfig& cfg)
    : node_id_(std::move(node_id)), cfg_(cfg) {
  cfg_.validate();
}

EdgeNode::Outcome EdgeNode::process_line(const std::string& line) {
  Outcome out;
  RawTuple raw;
  std::string err;
  if (!parse_tuple(line, raw, err)) {
    ++report_.malformed_lines;
    out.malformed = true;
    out.error = std::move(err);
    return out;
  }
  raw.arrival_seq = next_seq_++;
  return run_steps(std::move(raw));
}

EdgeNode::Outcome EdgeNode::process_tuple(RawTuple raw) {
  raw.arrival_seq = next_seq_++;
  return run_steps(std::move(raw));
}

EdgeNode::Outcome EdgeNode::run_steps(RawTuple raw) {
  Outcome out;
  ++report_.input_count;

  if (!check_missing_attributes(raw, cfg_)) {
    ++report_.missing_attribute_rejects;
    out.reject = RejectRecord{std::move(raw), RejectReason::kMissingAttribute, RejectStage::kEdge};
    return out;
  }
  if (!check_wrong_values(raw, cfg_)) {
    ++report_.wrong_value_rejects;
    out.reject = RejectRecord{std::move(raw), RejectReason::kWrongValue, RejectStage::kEdge};
    return out;
  }
  report_.redundant_attributes_stripped += strip_redundant(raw, cfg_);

  std::string key = raw.vehicle_id + "\x1f" + std::to_string(*raw.ts_ms);
  if (!seen_keys_.insert(key).second) {
    ++report_.duplicates_removed;
    out.reject = RejectRecord{std::move(raw), RejectReason::kDuplicate, RejectStage::kEdge};
    return out;
  }

  CleanTuple clean;
  std::string err;
  if (!clean_from_raw(raw, clean, err)) {
    // Unreachable after the checks above; count it honestly if it ever fires.
    ++report_.wrong_value_rejects;
    out.reject = RejectRecord{std::move(raw), RejectReason::kWrongValue, RejectStage::kEdge};
    return out;
  }
  ts_by_vehicle_[clean.vehicle_id].push_back(clean.ts_ms);
  ++report_.output_count;
  out.clean = std::move(clean);
  return out;
}

const CleaningReport& EdgeNode::finish() {
  if (!finished_) {
    finished_ = true;
    for (auto& [vehicle, ts_list] : ts_by_vehicle_) {
      std::sort(ts_list.begin(), ts_list.end());
      auto gaps = detect_missing(vehicle, ts_list, cfg_);
      report_.gaps.insert(report_.gaps.end(), gaps.begin(), gaps.end());
    }
  }
  return report_;
}

CleanStreamResult clean_stream(std::istream& in, const CleaningConfig& cfg,
                               const std::string& node_id) {
  if (!in) throw std::runtime_error("unreadable input stream");
  EdgeNode node(node_id, cfg);
  CleanStreamResult result;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto outcome = node.process_line(line);
    if (outcome.clean) result.tuples.push_back(std::move(*outcome.clean));
    if (outcome.reject) result.rejects.push_back(std::move(*outcome.reject));
  }
  if (in.bad()) throw std::runtime_error("I/O error while reading input stream");
  result.report = node.finish();
  return result;
}

}  // namespace fogpipe::edge
